#pragma once

#include <span>
#include <vector>

namespace hgch::geom {

// Ball boundary margin: every ball-producing op projects its result so that
// ||x|| <= sqrt(k) * (1 - kBallMargin). Keeps conformal factors finite.
inline constexpr double kBallMargin = 1e-5;
// artanh arguments are clamped to [0, 1 - kArtanhClamp]
inline constexpr double kArtanhClamp = 1e-7;

// Curvature parameter of the Poincare ball B = { x : ||x||^2 < k }.
// k is the reciprocal of the (negative) sectional curvature magnitude.
class Curvature {
public:
    Curvature() = default;
    explicit Curvature(double k);
    double k() const { return k_; }
    double sqrt_k() const { return sqrt_k_; }
    friend bool operator==(Curvature a, Curvature b) { return a.k_ == b.k_; }

private:
    double k_ = 1.0;
    double sqrt_k_ = 1.0;
};

struct TangentVec {
    std::vector<double> coords;
};

struct BallPoint {
    std::vector<double> coords;
    Curvature curv;
};

double dot(std::span<const double> a, std::span<const double> b);
double sq_norm(std::span<const double> v);
double norm(std::span<const double> v);

// arcosh(1 + z) evaluated without cancellation near z = 0
double stable_acosh1p(double z);
double clamped_artanh(double t);

bool in_ball(std::span<const double> x, Curvature c);
void project_to_ball(std::span<double> x, Curvature c);

// Unchecked kernels over raw spans; inputs are assumed valid. These back the
// typed API below and the autodiff tape.
namespace raw {

// z-argument of the distance: 2k||x-y||^2 / ((k-||x||^2)(k-||y||^2))
double dist_z(std::span<const double> x, std::span<const double> y, double k);
double dist(std::span<const double> x, std::span<const double> y, double k);
double sq_dist(std::span<const double> x, std::span<const double> y, double k);
void exp_o(std::span<const double> v, double k, std::span<double> out);
void log_o(std::span<const double> y, double k, std::span<double> out);
void mobius_scalar(double a, std::span<const double> y, double k, std::span<double> out);
double conformal_factor(std::span<const double> x, double k);

}  // namespace raw

// geodesic distance; throws std::invalid_argument on dimension or curvature
// mismatch or points outside the ball
double dist(const BallPoint& x, const BallPoint& y);
double sq_dist(const BallPoint& x, const BallPoint& y);

// exponential map at the origin; exp_o(0) = origin
BallPoint exp_o(const TangentVec& v, Curvature c);

// logarithmic map at the origin; log_o(origin) = 0
TangentVec log_o(const BallPoint& y);

// Mobius scalar multiplication a (x) y
BallPoint mobius_scalar(double a, const BallPoint& y);

// lambda(k, x) = 2 / (1 - ||x||^2 / k), strictly increasing in ||x||
double conformal_factor(const BallPoint& x);

// Weighted gyromidpoint: (1/2) (x) [ sum_i w_i lambda_i x_i / sum_j w_j (lambda_j - 1) ].
// Weights must be positive; result stays inside the ball for any batch.
BallPoint gyromidpoint(std::span<const BallPoint> points, std::span<const double> weights);
BallPoint gyromidpoint(std::span<const BallPoint> points);  // unit weights

}  // namespace hgch::geom
