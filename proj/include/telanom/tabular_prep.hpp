#pragma once

#include "telanom/tabular/design_matrix.hpp"
#include "telanom/tabular/recipe.hpp"
#include "telanom/tabular/regression_tree.hpp"
#include "telanom/tabular/target_encoding.hpp"
#include "telanom/tabular/yeo_johnson.hpp"
