#pragma once

#include <cstddef>

namespace photonids::nn::kernels {

// Kernel-size-3, zero-padded, length-preserving 1-D convolution primitives
// for a single sample. Weight packing for the fast path is [ci][j][co]
// (broadcast order); the canonical layout elsewhere is [co][ci][j].
//
// z[co][l] = b[co] + sum_ci sum_j Wp[ci][j][co] * u[ci][l+j-1]

template <class T>
void conv3_forward_ref(const T* u, const T* w_canonical, const T* bias, T* z,
                       int cin, int cout, int len) {
  for (int co = 0; co < cout; ++co) {
    T* zr = z + static_cast<std::size_t>(co) * len;
    T b = bias ? bias[co] : T(0);
    for (int l = 0; l < len; ++l) zr[l] = b;
    for (int ci = 0; ci < cin; ++ci) {
      const T* ur = u + static_cast<std::size_t>(ci) * len;
      const T* w = w_canonical + (static_cast<std::size_t>(co) * cin + ci) * 3;
      zr[0] += w[1] * ur[0] + (len > 1 ? w[2] * ur[1] : T(0));
      for (int l = 1; l < len - 1; ++l)
        zr[l] += w[0] * ur[l - 1] + w[1] * ur[l] + w[2] * ur[l + 1];
      if (len > 1) zr[len - 1] += w[0] * ur[len - 2] + w[1] * ur[len - 1];
    }
  }
}

// dW[co][ci][j] += sum_l gz[co][l] * u[ci][l+j-1] (zero padded)
template <class T>
void conv3_grad_weights_ref(const T* u, const T* gz, T* gw_canonical, T* gbias,
                            int cin, int cout, int len) {
  for (int co = 0; co < cout; ++co) {
    const T* gr = gz + static_cast<std::size_t>(co) * len;
    if (gbias) {
      T acc = T(0);
      for (int l = 0; l < len; ++l) acc += gr[l];
      gbias[co] += acc;
    }
    for (int ci = 0; ci < cin; ++ci) {
      const T* ur = u + static_cast<std::size_t>(ci) * len;
      T a0 = T(0), a1 = T(0), a2 = T(0);
      for (int l = 1; l < len - 1; ++l) {
        T g = gr[l];
        a0 += g * ur[l - 1];
        a1 += g * ur[l];
        a2 += g * ur[l + 1];
      }
      a1 += gr[0] * ur[0];
      if (len > 1) {
        a2 += gr[0] * ur[1];
        a0 += gr[len - 1] * ur[len - 2];
        a1 += gr[len - 1] * ur[len - 1];
      }
      T* gw = gw_canonical + (static_cast<std::size_t>(co) * cin + ci) * 3;
      gw[0] += a0;
      gw[1] += a1;
      gw[2] += a2;
    }
  }
}

// Fast float path (AVX-512 when compiled in, tiled scalar otherwise).
// Requires cout % 4 == 0; callers fall back to the reference otherwise.
void conv3_forward_f32(const float* u, const float* w_packed,
                       const float* bias, float* z, int cin, int cout,
                       int len);
void conv3_grad_weights_f32(const float* u, const float* gz, float* gw,
                            float* gbias, int cin, int cout, int len);

bool conv3_fast_available(int cin, int cout, int len);

/// Packs canonical [co][ci][j] weights into broadcast order [ci][j][co].
template <class T>
void pack_weights(const T* w_canonical, T* w_packed, int cin, int cout) {
  for (int ci = 0; ci < cin; ++ci)
    for (int j = 0; j < 3; ++j)
      for (int co = 0; co < cout; ++co)
        w_packed[(static_cast<std::size_t>(ci) * 3 + j) * cout + co] =
            w_canonical[(static_cast<std::size_t>(co) * cin + ci) * 3 + j];
}

/// Packs the transposed+flipped weights used by the input-gradient pass:
/// du[ci][l] = sum_co sum_j W[co][ci][j] gz[co][l+1-j], i.e. a kernel-3
/// convolution of gz with V[ci][co][j'] = W[co][ci][2-j'].
template <class T>
void pack_weights_transposed(const T* w_canonical, T* w_packed, int cin,
                             int cout) {
  // Packed for a conv with cin_new = cout, cout_new = cin: [co][j][ci_new]
  for (int co = 0; co < cout; ++co)
    for (int j = 0; j < 3; ++j)
      for (int ci = 0; ci < cin; ++ci)
        w_packed[(static_cast<std::size_t>(co) * 3 + j) * cin + ci] =
            w_canonical[(static_cast<std::size_t>(co) * cin + ci) * 3 +
                        (2 - j)];
}

template <class T>
void transpose_flip_canonical(const T* w_canonical, T* v_canonical, int cin,
                              int cout) {
  // V[ci][co][j] = W[co][ci][2-j]; V is canonical for a (cout -> cin) conv.
  for (int ci = 0; ci < cin; ++ci)
    for (int co = 0; co < cout; ++co)
      for (int j = 0; j < 3; ++j)
        v_canonical[(static_cast<std::size_t>(ci) * cout + co) * 3 + j] =
            w_canonical[(static_cast<std::size_t>(co) * cin + ci) * 3 +
                        (2 - j)];
}

}  // namespace photonids::nn::kernels
