#include "morseflow/sphere_function.hpp"

#include <cmath>
#include <stdexcept>

namespace morseflow {

CompiledPolynomial::CompiledPolynomial(const Polynomial& p) : nvars_(static_cast<int>(p.num_variables())) {
  offsets_.push_back(0);
  for (const auto& [m, c] : p.terms()) {
    coef_.push_back(c);
    for (std::size_t k = 0; k < m.size(); ++k)
      if (m[k] > 0) factors_.emplace_back(static_cast<int>(k), m[k]);
    offsets_.push_back(static_cast<std::uint32_t>(factors_.size()));
  }
}

double CompiledPolynomial::operator()(const double* x) const {
  double sum = 0.0;
  for (std::size_t t = 0; t < coef_.size(); ++t) {
    double term = coef_[t];
    for (std::uint32_t f = offsets_[t]; f < offsets_[t + 1]; ++f) {
      const double xv = x[factors_[f].first];
      for (int e = 0; e < factors_[f].second; ++e) term *= xv;
    }
    sum += term;
  }
  return sum;
}

namespace {

Chart make_chart(const Space& space, Eigen::MatrixXcd frame, int index) {
  Chart c;
  c.kind = space.kind();
  c.index = index;
  const int h = space.homogeneous_dim();
  const int d = space.manifold_dim();
  const int m = space.ambient_real_dim();
  c.directions.resize(m, d);
  if (space.is_complex()) {
    c.center = realify(frame.col(0));
    const std::complex<double> I(0.0, 1.0);
    for (int k = 1; k < h; ++k) {
      c.directions.col(2 * (k - 1)) = realify(frame.col(k));
      c.directions.col(2 * (k - 1) + 1) = realify(I * frame.col(k));
    }
  } else {
    c.center = frame.col(0).real();
    for (int k = 1; k < h; ++k) c.directions.col(k - 1) = frame.col(k).real();
  }
  c.frame = std::move(frame);
  return c;
}

}  // namespace

Chart standard_chart(const Space& space, int i) {
  const int h = space.homogeneous_dim();
  if (i < 0 || i >= h) throw std::out_of_range("chart index out of range");
  Eigen::MatrixXcd frame = Eigen::MatrixXcd::Zero(h, h);
  frame(i, 0) = 1.0;
  int col = 1;
  for (int k = 0; k < h; ++k)
    if (k != i) frame(k, col++) = 1.0;
  return make_chart(space, std::move(frame), i);
}

Chart centered_chart(const Space& space, const Eigen::VectorXd& ambient_point) {
  const int h = space.homogeneous_dim();
  if (ambient_point.size() != space.ambient_real_dim()) throw std::invalid_argument("ambient point has wrong dimension");
  const double nrm = ambient_point.norm();
  if (!(nrm > 0.0)) throw std::invalid_argument("cannot center a chart at the origin");
  Eigen::VectorXcd p = space.is_complex() ? Eigen::VectorXcd(complexify(ambient_point / nrm))
                                          : Eigen::VectorXcd((ambient_point / nrm).cast<std::complex<double>>());
  Eigen::MatrixXcd m(h, h + 1);
  m.col(0) = p;
  m.rightCols(h) = Eigen::MatrixXcd::Identity(h, h);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(m);
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(h, h);
  q.col(0) = p;
  if (!space.is_complex()) q = q.real().cast<std::complex<double>>();
  return make_chart(space, std::move(q), -1);
}

Eigen::VectorXd chart_to_ambient(const Chart& chart, const Eigen::VectorXd& u) {
  if (u.size() != chart.directions.cols()) throw std::invalid_argument("chart coordinates have wrong dimension");
  if (!u.allFinite()) throw std::domain_error("point outside chart domain");
  Eigen::VectorXd v = chart.center + chart.directions * u;
  return v / v.norm();
}

std::optional<Eigen::VectorXd> ambient_to_chart(const Chart& chart, const Eigen::VectorXd& v) {
  const double nrm = v.norm();
  if (chart.kind == SpaceKind::ComplexProjective) {
    const Eigen::VectorXcd z = complexify(v);
    const std::complex<double> alpha = chart.frame.col(0).dot(z);  // conj(col) . z
    if (std::abs(alpha) <= 1e-12 * nrm) return std::nullopt;
    Eigen::VectorXd u(chart.directions.cols());
    for (Eigen::Index k = 1; k < chart.frame.cols(); ++k) {
      const std::complex<double> w = chart.frame.col(k).dot(z) / alpha;
      u(2 * (k - 1)) = w.real();
      u(2 * (k - 1) + 1) = w.imag();
    }
    return u;
  }
  const double a = chart.center.dot(v);
  if (std::abs(a) <= 1e-12 * nrm) return std::nullopt;
  return Eigen::VectorXd(chart.directions.transpose() * v / a);
}

int dominant_coordinate(const Space& space, const Eigen::VectorXd& v) {
  int best = 0;
  double best_mod = -1.0;
  for (int k = 0; k < space.homogeneous_dim(); ++k) {
    const double mod = space.is_complex() ? std::hypot(v(2 * k), v(2 * k + 1)) : std::abs(v(k));
    if (mod > best_mod) {
      best_mod = mod;
      best = k;
    }
  }
  return best;
}

double projective_distance(const Space& space, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double overlap;
  if (space.is_complex()) overlap = std::abs(complexify(a).dot(complexify(b)));
  else overlap = std::abs(a.dot(b));
  overlap /= a.norm() * b.norm();
  return std::sqrt(std::max(0.0, 1.0 - overlap * overlap));
}

Eigen::VectorXd canonical_representative(const Space& space, const Eigen::VectorXd& v) {
  Eigen::VectorXd u = v / v.norm();
  const int h = space.homogeneous_dim();
  double maxmod = 0.0;
  for (int k = 0; k < h; ++k)
    maxmod = std::max(maxmod, space.is_complex() ? std::hypot(u(2 * k), u(2 * k + 1)) : std::abs(u(k)));
  for (int k = 0; k < h; ++k) {
    if (space.is_complex()) {
      const std::complex<double> zk(u(2 * k), u(2 * k + 1));
      if (std::abs(zk) > 1e-8 * maxmod) {
        Eigen::VectorXcd z = complexify(u) * (std::conj(zk) / std::abs(zk));
        z(k) = std::abs(z(k));
        return realify(z);
      }
    } else if (std::abs(u(k)) > 1e-8 * maxmod) {
      return u(k) < 0 ? Eigen::VectorXd(-u) : u;
    }
  }
  return u;
}

SphereFunction::SphereFunction(const Polynomial& p, const Space& space) : space_(space), poly_(p) {
  const int m = space.ambient_real_dim();
  if (static_cast<int>(p.num_variables()) != m) throw std::invalid_argument("polynomial arity does not match the ambient space");
  for (int d : p.degrees()) {
    const Polynomial part = p.homogeneous_part(d);
    Part pt;
    pt.degree = d;
    pt.value = CompiledPolynomial(part);
    std::vector<Polynomial> first;
    for (int a = 0; a < m; ++a) {
      first.push_back(part.derivative(a));
      pt.grad.emplace_back(first.back());
    }
    for (int a = 0; a < m; ++a)
      for (int b = a; b < m; ++b) pt.hess.emplace_back(first[a].derivative(b));
    scale_ += coefficient_l1_norm(part) * std::max(1, d);
    parts_.push_back(std::move(pt));
  }
}

void SphereFunction::ambient_jet(const Part& part, const Eigen::VectorXd& x, double& v, Eigen::VectorXd* g,
                                 Eigen::MatrixXd* h) const {
  const int m = space_.ambient_real_dim();
  v = part.value(x.data());
  if (g) {
    g->resize(m);
    for (int a = 0; a < m; ++a) (*g)(a) = part.grad[a](x.data());
  }
  if (h) {
    h->resize(m, m);
    int idx = 0;
    for (int a = 0; a < m; ++a)
      for (int b = a; b < m; ++b) {
        const double hv = part.hess[idx++](x.data());
        (*h)(a, b) = hv;
        (*h)(b, a) = hv;
      }
  }
}

double SphereFunction::value(const Eigen::VectorXd& x) const {
  double s = 0.0;
  for (const auto& part : parts_) s += part.value(x.data());
  return s;
}

Eigen::VectorXd SphereFunction::gradient(const Eigen::VectorXd& x) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(space_.ambient_real_dim()), gp;
  double v;
  for (const auto& part : parts_) {
    ambient_jet(part, x, v, &gp, nullptr);
    g += gp;
  }
  return g;
}

Eigen::MatrixXd SphereFunction::hessian(const Eigen::VectorXd& x) const {
  const int m = space_.ambient_real_dim();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, m), hp;
  double v;
  for (const auto& part : parts_) {
    ambient_jet(part, x, v, nullptr, &hp);
    h += hp;
  }
  return h;
}

ChartJet SphereFunction::chart_jet(const Chart& chart, const Eigen::VectorXd& u) const {
  const auto d = chart.directions.cols();
  if (u.size() != d) throw std::invalid_argument("chart coordinates have wrong dimension");
  if (!u.allFinite()) throw std::domain_error("point outside chart domain");
  const Eigen::VectorXd x = chart.center + chart.directions * u;
  const double q = 1.0 + u.squaredNorm();

  ChartJet jet;
  jet.gradient = Eigen::VectorXd::Zero(d);
  jet.hessian = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd ga;
  Eigen::MatrixXd ha;
  for (const auto& part : parts_) {
    double p;
    ambient_jet(part, x, p, &ga, &ha);
    const Eigen::VectorXd g = chart.directions.transpose() * ga;
    const Eigen::MatrixXd hc = chart.directions.transpose() * ha * chart.directions;
    // s = q^{-a}, a = degree/2
    const double a = 0.5 * part.degree;
    const double s = std::pow(q, -a);
    const double s1 = -2.0 * a * std::pow(q, -a - 1.0);
    const double s2 = 4.0 * a * (a + 1.0) * std::pow(q, -a - 2.0);
    const Eigen::VectorXd ds = s1 * u;
    jet.value += p * s;
    jet.gradient += g * s + p * ds;
    jet.hessian += hc * s + g * ds.transpose() + ds * g.transpose() + p * (s2 * u * u.transpose());
    jet.hessian.diagonal().array() += p * s1;
  }
  return jet;
}

}  // namespace morseflow
