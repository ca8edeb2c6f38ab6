#pragma once

#include "pairdisc/tensor.hpp"

namespace pairdisc {

// Gate layout inside the fused 4d axis: [input | forget | candidate | output].

struct LstmCache {
  Matd x;       // S x in, inputs as fed to the cell
  Matd gi, gf, gg, go;  // S x d, post-activation gates
  Matd c;       // S x d, cell states
  Matd tanh_c;  // S x d
  Matd h;       // S x d, hidden states
};

// Runs the standard LSTM cell equations over the rows of X from zero initial
// state. Fills `cache` for the backward pass.
void lstm_forward(const Matd& X, const Tensor& Wx, const Tensor& Wh, const Tensor& b,
                  LstmCache& cache);

// Single step against a running (h, c) state; used by greedy generation.
void lstm_step(const RowVecd& x, const Tensor& Wx, const Tensor& Wh, const Tensor& b, RowVecd& h,
               RowVecd& c);

// Exact backpropagation through time. dH carries the upstream gradient per
// hidden row (S x d). Accumulates into the g* tensors and returns dX (S x in).
Matd lstm_backward(const LstmCache& cache, const Tensor& Wx, const Tensor& Wh, const Matd& dH,
                   Tensor& gWx, Tensor& gWh, Tensor& gb);

}  // namespace pairdisc
