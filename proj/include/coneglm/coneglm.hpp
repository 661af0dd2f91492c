#pragma once

#include "coneglm/aggregate.hpp"
#include "coneglm/backend.hpp"
#include "coneglm/bnb.hpp"
#include "coneglm/cones.hpp"
#include "coneglm/constraints.hpp"
#include "coneglm/csv.hpp"
#include "coneglm/family.hpp"
#include "coneglm/fit.hpp"
#include "coneglm/formula.hpp"
#include "coneglm/irls.hpp"
#include "coneglm/loglik.hpp"
#include "coneglm/model.hpp"
#include "coneglm/model_matrix.hpp"
#include "coneglm/program.hpp"
#include "coneglm/program_json.hpp"
#include "coneglm/reformulate.hpp"
#include "coneglm/scaling.hpp"
#include "coneglm/solution.hpp"
