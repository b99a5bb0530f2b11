#pragma once

#include "christoffel.hpp"
#include "cometric.hpp"
#include "coords.hpp"
#include "errors.hpp"
#include "exp_map.hpp"
#include "expression.hpp"
#include "extremal_flow.hpp"
#include "models.hpp"
