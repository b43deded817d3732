#pragma once

#include "rdelab/error.hpp"
#include "rdelab/matrix.hpp"
#include "rdelab/spectral.hpp"
#include "rdelab/base.hpp"
#include "rdelab/cover.hpp"
#include "rdelab/set_cover.hpp"
#include "rdelab/measure.hpp"
#include "rdelab/entropy.hpp"
#include "rdelab/witness.hpp"
#include "rdelab/optimize.hpp"
#include "rdelab/instance.hpp"
#include "rdelab/harness.hpp"
#include "rdelab/report.hpp"
