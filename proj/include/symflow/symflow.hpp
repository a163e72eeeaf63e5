#pragma once

#include "symflow/config.hpp"
#include "symflow/constraints.hpp"
#include "symflow/core.hpp"
#include "symflow/diagnostics.hpp"
#include "symflow/forces.hpp"
#include "symflow/io.hpp"
#include "symflow/kinematics.hpp"
#include "symflow/material.hpp"
#include "symflow/mesh.hpp"
#include "symflow/runner.hpp"
#include "symflow/scenario.hpp"
#include "symflow/state.hpp"
#include "symflow/stepper.hpp"
