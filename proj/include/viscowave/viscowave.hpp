#pragma once

#include "viscowave/config.hpp"
#include "viscowave/energy.hpp"
#include "viscowave/error.hpp"
#include "viscowave/experiments.hpp"
#include "viscowave/kernel.hpp"
#include "viscowave/memory.hpp"
#include "viscowave/operators.hpp"
#include "viscowave/output.hpp"
#include "viscowave/problem.hpp"
#include "viscowave/reference_problem.hpp"
#include "viscowave/stepper.hpp"
