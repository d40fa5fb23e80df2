#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace hgch::ad {

// Closed primitive set. Everything the model needs (layer maps, aggregation,
// fusion, scoring, losses) is expressed through these ops, so verifying their
// vector-Jacobian products verifies the whole backward pass.
enum class Op : std::uint8_t {
    leaf,
    exp_o,
    log_o,
    mobius_scalar,
    conformal_factor,
    dist,
    sq_dist,
    sigmoid,
    mul,           // elementwise product, scalar broadcast on either side
    div,           // elementwise quotient, scalar broadcast on the divisor
    weighted_sum,  // fixed-coefficient linear combination
    matvec,        // W (rows x cols, row-major) times x
    norm,          // Euclidean norm, vector -> scalar
    hinge,         // max(0, x), subgradient 0 at the kink
};

// forward/backward arithmetic precision; f32 rounds every op result (and
// every adjoint accumulation) to float, for precision analysis
enum class Precision : std::uint8_t { f64, f32 };

struct Node {
    Op op = Op::leaf;
    std::vector<int> inputs;
    std::vector<double> coeffs;  // weighted_sum only
    std::vector<double> value;   // cached forward value; scalars have size 1
    double k = 1.0;              // curvature attribute
    double a = 0.0;              // mobius_scalar factor
    int rows = 0, cols = 0;      // matvec shape
    bool requires_grad = false;  // leaves only
};

// gradients for every requires_grad leaf, in leaf id order
struct GradBuffer {
    std::vector<int> leaf_ids;
    std::vector<std::vector<double>> grads;
    const std::vector<double>& at(int leaf_id) const;
};

class Tape {
public:
    int leaf(std::vector<double> value, bool requires_grad = false);
    int constant(std::vector<double> value) { return leaf(std::move(value), false); }
    int constant(double v) { return leaf({v}, false); }

    int exp_o(int v, double k);
    int log_o(int y, double k);
    int mobius_scalar(double a, int y, double k);
    int conformal_factor(int x, double k);
    int dist(int x, int y, double k);
    int sq_dist(int x, int y, double k);
    int sigmoid(int x);
    int mul(int a, int b);
    int div(int num, int den);
    int weighted_sum(std::span<const int> xs, std::span<const double> coeffs);
    int add(int a, int b);
    int sub(int a, int b);
    int matvec(int w, int x, int rows, int cols);
    int norm(int x);
    int hinge(int x);

    // recorded as its closed-form composition (conformal factors, weighted
    // sum, division, Mobius scalar), so the backward pass reuses the
    // independently verified adjoints of those pieces
    int gyromidpoint(std::span<const int> points, std::span<const double> weights, double k);

    // generic entry point; unknown primitive names are rejected. Attribute
    // defaults: k = 1, mobius factor 1/2, unit coefficients/weights.
    int record(std::string_view primitive, std::span<const int> inputs);

    void set_output(int id);
    int output() const { return output_; }

    int size() const { return static_cast<int>(nodes_.size()); }
    void truncate(int n);  // drop nodes [n, size), e.g. per-batch loss heads

    const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    const std::vector<double>& value(int id) const { return node(id).value; }
    double scalar_value(int id) const { return node(id).value.at(0); }
    void set_leaf(int id, std::span<const double> v);

    // re-evaluates every node in recording order from current leaf values
    void recompute(Precision prec = Precision::f64);

    // reverse sweep from the scalar output; leaves off the output path get
    // zero gradients. Deterministic: repeated calls are bit-identical.
    GradBuffer backward(Precision prec = Precision::f64) const;

private:
    int push(Node n);
    void eval_node(int id, Precision prec);
    int check_id(int id) const;

    std::vector<Node> nodes_;
    int output_ = -1;
};

struct GradCheckEntry {
    int leaf = -1;
    int index = -1;
    double fd = 0.0;
    double ad = 0.0;
    double rel_err = 0.0;
};

struct GradCheckReport {
    bool passed = false;
    double max_rel_err = 0.0;
    GradCheckEntry worst;
    int coords_checked = 0;
    double h = 0.0;
    double tol = 0.0;
};

// central differences (f(x+h) - f(x-h)) / 2h on every requires_grad leaf
// coordinate against the reverse-mode gradient. Relative error is
// |fd - ad| / max(1, |fd|, |ad|), so a constant loss reports zero error.
GradCheckReport grad_check(Tape& tape, double h, double tol,
                           Precision prec = Precision::f64);

// same check against an externally supplied gradient (test hook)
GradCheckReport grad_check_against(Tape& tape, const GradBuffer& grads, double h,
                                   double tol, Precision prec = Precision::f64);

}  // namespace hgch::ad
