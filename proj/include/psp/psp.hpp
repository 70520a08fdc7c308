#pragma once

#include "psp/banded_matrix.hpp"
#include "psp/banded_solve.hpp"
#include "psp/csr_matrix.hpp"
#include "psp/errors.hpp"
#include "psp/gmres.hpp"
#include "psp/linear_operator.hpp"
#include "psp/mrep.hpp"
#include "psp/probe_history.hpp"
#include "psp/problems.hpp"
#include "psp/vector.hpp"
