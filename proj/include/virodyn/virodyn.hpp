#pragma once

#include "virodyn/errors.hpp"
#include "virodyn/saturation.hpp"
#include "virodyn/state.hpp"
#include "virodyn/params.hpp"
#include "virodyn/models.hpp"
#include "virodyn/linalg.hpp"
#include "virodyn/jacobian.hpp"
#include "virodyn/roots.hpp"
#include "virodyn/integrator.hpp"
#include "virodyn/analysis.hpp"
#include "virodyn/verification.hpp"
#include "virodyn/io/trajectory_io.hpp"
#include "virodyn/io/scenario.hpp"
