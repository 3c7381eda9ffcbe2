#ifndef VEXFLOW_EXPR_HPP
#define VEXFLOW_EXPR_HPP

#include <memory>
#include <string>

#include "vexflow/grid.hpp"

namespace vexflow {

// Closed-form scalar expressions over (t, x, y, z) used by scenario configs:
// exponent fields, initial data, forcing and cutoff functions are all given
// this way and sampled on the grid. Grammar: + - * / ^, parentheses, unary
// minus, the constants pi and e, and the usual single/double argument
// functions (sin cos tan exp log sqrt abs tanh sinh cosh min max pow).
class Expr {
  public:
    static Expr parse(const std::string& text);
    double eval(double t, double x, double y, double z = 0.0) const;
    bool empty() const { return root == nullptr; }

    struct Node;

  private:
    std::shared_ptr<const Node> root;
};

}  // namespace vexflow

#endif
