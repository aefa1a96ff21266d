#pragma once

// Umbrella header.

#include "hkid/error.hpp"
#include "hkid/gamma.hpp"
#include "hkid/io.hpp"
#include "hkid/kernel.hpp"
#include "hkid/material.hpp"
#include "hkid/pipeline.hpp"
#include "hkid/report.hpp"
#include "hkid/samples.hpp"
#include "hkid/spline.hpp"
#include "hkid/weighted_residual.hpp"
