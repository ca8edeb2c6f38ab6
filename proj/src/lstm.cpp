#include "pairdisc/lstm.hpp"

#include <cmath>

namespace pairdisc {

namespace {

inline double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

struct GateRows {
  RowVecd i, f, g, o;
};

GateRows activate(const RowVecd& z, Index d) {
  GateRows r;
  r.i = z.segment(0, d).unaryExpr([](double v) { return sigmoid(v); });
  r.f = z.segment(d, d).unaryExpr([](double v) { return sigmoid(v); });
  r.g = z.segment(2 * d, d).array().tanh();
  r.o = z.segment(3 * d, d).unaryExpr([](double v) { return sigmoid(v); });
  return r;
}

}  // namespace

void lstm_forward(const Matd& X, const Tensor& Wx, const Tensor& Wh, const Tensor& b,
                  LstmCache& cache) {
  const Index S = X.rows();
  const Index d = Wh.dim(0);
  if (Wx.dim(0) != X.cols()) throw std::invalid_argument("lstm_forward: input width mismatch");

  cache.x = X;
  cache.gi.resize(S, d);
  cache.gf.resize(S, d);
  cache.gg.resize(S, d);
  cache.go.resize(S, d);
  cache.c.resize(S, d);
  cache.tanh_c.resize(S, d);
  cache.h.resize(S, d);

  auto Wxm = Wx.mat();
  auto Whm = Wh.mat();
  auto bm = b.mat();  // 1 x 4d

  RowVecd h_prev = RowVecd::Zero(d);
  RowVecd c_prev = RowVecd::Zero(d);
  for (Index t = 0; t < S; ++t) {
    RowVecd z = X.row(t) * Wxm + h_prev * Whm + bm;
    GateRows g = activate(z, d);
    RowVecd c = g.f.cwiseProduct(c_prev) + g.i.cwiseProduct(g.g);
    RowVecd tc = c.array().tanh();
    RowVecd h = g.o.cwiseProduct(tc);
    cache.gi.row(t) = g.i;
    cache.gf.row(t) = g.f;
    cache.gg.row(t) = g.g;
    cache.go.row(t) = g.o;
    cache.c.row(t) = c;
    cache.tanh_c.row(t) = tc;
    cache.h.row(t) = h;
    h_prev = h;
    c_prev = c;
  }
}

void lstm_step(const RowVecd& x, const Tensor& Wx, const Tensor& Wh, const Tensor& b, RowVecd& h,
               RowVecd& c) {
  const Index d = Wh.dim(0);
  RowVecd z = x * Wx.mat() + h * Wh.mat() + b.mat();
  GateRows g = activate(z, d);
  c = g.f.cwiseProduct(c) + g.i.cwiseProduct(g.g);
  h = g.o.cwiseProduct(c.array().tanh().matrix());
}

Matd lstm_backward(const LstmCache& cache, const Tensor& Wx, const Tensor& Wh, const Matd& dH,
                   Tensor& gWx, Tensor& gWh, Tensor& gb) {
  const Index S = cache.h.rows();
  const Index d = cache.h.cols();
  if (dH.rows() != S || dH.cols() != d) throw std::invalid_argument("lstm_backward: dH shape mismatch");

  auto Wxm = Wx.mat();
  auto Whm = Wh.mat();
  auto gWxm = gWx.mat();
  auto gWhm = gWh.mat();
  auto gbm = gb.mat();

  Matd dX(S, cache.x.cols());
  RowVecd dh_carry = RowVecd::Zero(d);
  RowVecd dc_carry = RowVecd::Zero(d);
  for (Index t = S - 1; t >= 0; --t) {
    RowVecd dh = dH.row(t) + dh_carry;
    RowVecd i = cache.gi.row(t), f = cache.gf.row(t), g = cache.gg.row(t), o = cache.go.row(t);
    RowVecd tc = cache.tanh_c.row(t);
    RowVecd c_prev = t > 0 ? RowVecd(cache.c.row(t - 1)) : RowVecd(RowVecd::Zero(d));

    RowVecd dc = dh.cwiseProduct(o).cwiseProduct((1.0 - tc.array().square()).matrix()) + dc_carry;
    RowVecd dzo = dh.cwiseProduct(tc).cwiseProduct(o.cwiseProduct((1.0 - o.array()).matrix()));
    RowVecd dzf = dc.cwiseProduct(c_prev).cwiseProduct(f.cwiseProduct((1.0 - f.array()).matrix()));
    RowVecd dzi = dc.cwiseProduct(g).cwiseProduct(i.cwiseProduct((1.0 - i.array()).matrix()));
    RowVecd dzg = dc.cwiseProduct(i).cwiseProduct((1.0 - g.array().square()).matrix());

    RowVecd dz(4 * d);
    dz << dzi, dzf, dzg, dzo;

    RowVecd h_prev = t > 0 ? RowVecd(cache.h.row(t - 1)) : RowVecd(RowVecd::Zero(d));
    gWxm.noalias() += cache.x.row(t).transpose() * dz;
    gWhm.noalias() += h_prev.transpose() * dz;
    gbm += dz;

    dX.row(t).noalias() = dz * Wxm.transpose();
    dh_carry.noalias() = dz * Whm.transpose();
    dc_carry = dc.cwiseProduct(f);
  }
  return dX;
}

}  // namespace pairdisc
