#pragma once

// Umbrella header for the attain library.

#include "attain/cost.hpp"
#include "attain/dynamics.hpp"
#include "attain/expr.hpp"
#include "attain/io.hpp"
#include "attain/linalg.hpp"
#include "attain/model.hpp"
#include "attain/pipeline.hpp"
#include "attain/qp.hpp"
#include "attain/sqp.hpp"
