#pragma once

#include "aniso/closed_forms.hpp"
#include "aniso/decay.hpp"
#include "aniso/error.hpp"
#include "aniso/exponents.hpp"
#include "aniso/grid.hpp"
#include "aniso/moser.hpp"
#include "aniso/rational.hpp"
#include "aniso/reduce.hpp"
#include "aniso/scaling.hpp"
#include "aniso/solver.hpp"
