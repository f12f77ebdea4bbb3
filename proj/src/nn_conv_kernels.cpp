#include "photonids/nn/conv_kernels.hpp"

#include <cstring>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

namespace photonids::nn::kernels {

bool conv3_fast_available(int cin, int cout, int len) {
  return cout % 4 == 0 && cin >= 1 && len >= 96;
}

#if defined(__AVX512F__)

namespace {

// Forward interior: l-chunk outer so each input chunk is read from memory
// once and stays in L1 across the output-channel blocks.
inline void fwd_interior(const float* u, const float* wp, const float* b,
                         float* z, int cin, int cout, int len) {
  int interior_end = 1 + ((len - 2) / 64) * 64;
  for (int l0 = 1; l0 < interior_end; l0 += 64) {
    for (int co = 0; co < cout; co += 4) {
      __m512 acc[4][4];
      for (int r = 0; r < 4; ++r) {
        __m512 bb = _mm512_set1_ps(b ? b[co + r] : 0.0f);
        for (int v = 0; v < 4; ++v) acc[r][v] = bb;
      }
      for (int ci = 0; ci < cin; ++ci) {
        const float* w = wp + static_cast<std::size_t>(ci) * 3 * cout + co;
        __m512 wv[4][3];
        for (int r = 0; r < 4; ++r)
          for (int j = 0; j < 3; ++j)
            wv[r][j] = _mm512_set1_ps(w[j * cout + r]);
        const float* ur = u + static_cast<std::size_t>(ci) * len + l0;
        for (int v = 0; v < 4; ++v) {
          __m512 um = _mm512_loadu_ps(ur + 16 * v - 1);
          __m512 uc = _mm512_loadu_ps(ur + 16 * v);
          __m512 up = _mm512_loadu_ps(ur + 16 * v + 1);
          for (int r = 0; r < 4; ++r) {
            acc[r][v] = _mm512_fmadd_ps(wv[r][0], um, acc[r][v]);
            acc[r][v] = _mm512_fmadd_ps(wv[r][1], uc, acc[r][v]);
            acc[r][v] = _mm512_fmadd_ps(wv[r][2], up, acc[r][v]);
          }
        }
      }
      for (int r = 0; r < 4; ++r)
        for (int v = 0; v < 4; ++v)
          _mm512_storeu_ps(z + static_cast<std::size_t>(co + r) * len + l0 +
                               16 * v,
                           acc[r][v]);
    }
  }
}

// dW tiles, blocked over l so gz/u blocks stay cache-resident while the
// (co, ci) register tiles sweep them. Interior columns only.
constexpr int kDwBlock = 1024;

inline void gradw_tile4(const float* u, const float* gz, float* gw, int cin,
                        int cout, int len, int l_lo, int l_hi) {
  // 4 x 2 channel tiles with per-channel input loads: 24 accumulators plus
  // the working vectors stay inside the 32-register file.
  for (int co = 0; co < cout; co += 4) {
    for (int ci = 0; ci < cin; ci += 2) {
      __m512 acc[4][2][3];
      for (auto& a : acc)
        for (auto& b2 : a)
          for (auto& c : b2) c = _mm512_setzero_ps();
      for (int l0 = l_lo; l0 + 16 <= l_hi; l0 += 16) {
        __m512 g[4];
        for (int r = 0; r < 4; ++r)
          g[r] = _mm512_loadu_ps(gz + static_cast<std::size_t>(co + r) * len +
                                 l0);
        for (int c = 0; c < 2; ++c) {
          const float* ur = u + static_cast<std::size_t>(ci + c) * len + l0;
          __m512 um = _mm512_loadu_ps(ur - 1);
          __m512 uc = _mm512_loadu_ps(ur);
          __m512 up = _mm512_loadu_ps(ur + 1);
          for (int r = 0; r < 4; ++r) {
            acc[r][c][0] = _mm512_fmadd_ps(g[r], um, acc[r][c][0]);
            acc[r][c][1] = _mm512_fmadd_ps(g[r], uc, acc[r][c][1]);
            acc[r][c][2] = _mm512_fmadd_ps(g[r], up, acc[r][c][2]);
          }
        }
      }
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 2; ++c) {
          float* w =
              gw + (static_cast<std::size_t>(co + r) * cin + (ci + c)) * 3;
          w[0] += _mm512_reduce_add_ps(acc[r][c][0]);
          w[1] += _mm512_reduce_add_ps(acc[r][c][1]);
          w[2] += _mm512_reduce_add_ps(acc[r][c][2]);
        }
    }
  }
}

// Single-input-channel variant (the first layer): 8 output rows per tile.
inline void gradw_cin1(const float* u, const float* gz, float* gw, int cout,
                       int len, int l_lo, int l_hi) {
  for (int co = 0; co < cout; co += 8) {
    __m512 acc[8][3];
    for (auto& a : acc)
      for (auto& c : a) c = _mm512_setzero_ps();
    for (int l0 = l_lo; l0 + 16 <= l_hi; l0 += 16) {
      __m512 um = _mm512_loadu_ps(u + l0 - 1);
      __m512 uc = _mm512_loadu_ps(u + l0);
      __m512 up = _mm512_loadu_ps(u + l0 + 1);
      for (int r = 0; r < 8; ++r) {
        __m512 g = _mm512_loadu_ps(gz + static_cast<std::size_t>(co + r) * len + l0);
        acc[r][0] = _mm512_fmadd_ps(g, um, acc[r][0]);
        acc[r][1] = _mm512_fmadd_ps(g, uc, acc[r][1]);
        acc[r][2] = _mm512_fmadd_ps(g, up, acc[r][2]);
      }
    }
    for (int r = 0; r < 8; ++r) {
      float* w = gw + static_cast<std::size_t>(co + r) * 3;
      w[0] += _mm512_reduce_add_ps(acc[r][0]);
      w[1] += _mm512_reduce_add_ps(acc[r][1]);
      w[2] += _mm512_reduce_add_ps(acc[r][2]);
    }
  }
}

}  // namespace

void conv3_forward_f32(const float* u, const float* wp, const float* bias,
                       float* z, int cin, int cout, int len) {
  fwd_interior(u, wp, bias, z, cin, cout, len);
  // Tail columns plus the two zero-padded edges, scalar.
  int interior_end = 1 + ((len - 2) / 64) * 64;
  for (int co = 0; co < cout; ++co) {
    float* zr = z + static_cast<std::size_t>(co) * len;
    float b = bias ? bias[co] : 0.0f;
    zr[0] = b;
    for (int l = interior_end; l < len - 1; ++l) zr[l] = b;
    zr[len - 1] = b;
  }
  for (int ci = 0; ci < cin; ++ci) {
    const float* ur = u + static_cast<std::size_t>(ci) * len;
    const float* w = wp + static_cast<std::size_t>(ci) * 3 * cout;
    for (int co = 0; co < cout; ++co) {
      float w0 = w[0 * cout + co], w1 = w[1 * cout + co], w2 = w[2 * cout + co];
      float* zr = z + static_cast<std::size_t>(co) * len;
      for (int l = interior_end; l < len - 1; ++l)
        zr[l] += w0 * ur[l - 1] + w1 * ur[l] + w2 * ur[l + 1];
      zr[0] += w1 * ur[0] + w2 * ur[1];
      zr[len - 1] += w0 * ur[len - 2] + w1 * ur[len - 1];
    }
  }
}

void conv3_grad_weights_f32(const float* u, const float* gz, float* gw,
                            float* gbias, int cin, int cout, int len) {
  bool tiled = (cin == 1 && cout % 8 == 0) || (cin % 2 == 0 && cout % 4 == 0);
  int interior_end = 1;
  if (tiled) {
    interior_end = 1 + ((len - 2) / 16) * 16;
    for (int l0 = 1; l0 < interior_end; l0 += kDwBlock) {
      int hi = l0 + kDwBlock < interior_end ? l0 + kDwBlock : interior_end;
      if (cin == 1)
        gradw_cin1(u, gz, gw, cout, len, l0, hi);
      else
        gradw_tile4(u, gz, gw, cin, cout, len, l0, hi);
    }
  }
  // Tail columns and edges (everything when the tiles don't apply).
  for (int co = 0; co < cout; ++co) {
    const float* gr = gz + static_cast<std::size_t>(co) * len;
    for (int ci = 0; ci < cin; ++ci) {
      const float* ur = u + static_cast<std::size_t>(ci) * len;
      float a0 = 0.f, a1 = 0.f, a2 = 0.f;
      for (int l = interior_end; l < len - 1; ++l) {
        float g = gr[l];
        a0 += g * ur[l - 1];
        a1 += g * ur[l];
        a2 += g * ur[l + 1];
      }
      a1 += gr[0] * ur[0];
      a2 += gr[0] * ur[1];
      a0 += gr[len - 1] * ur[len - 2];
      a1 += gr[len - 1] * ur[len - 1];
      float* w = gw + (static_cast<std::size_t>(co) * cin + ci) * 3;
      w[0] += a0;
      w[1] += a1;
      w[2] += a2;
    }
  }
  if (gbias) {
    for (int co = 0; co < cout; ++co) {
      const float* gr = gz + static_cast<std::size_t>(co) * len;
      float acc = 0.0f;
      for (int l = 0; l < len; ++l) acc += gr[l];
      gbias[co] += acc;
    }
  }
}

#else  // portable fallback

void conv3_forward_f32(const float* u, const float* wp, const float* bias,
                       float* z, int cin, int cout, int len) {
  // 8-wide output-channel tiling; decent auto-vectorization without AVX-512.
  constexpr int CB = 8;
  for (int co = 0; co < cout; co += CB) {
    int nb = cout - co < CB ? cout - co : CB;
    for (int r = 0; r < nb; ++r) {
      float* zr = z + static_cast<std::size_t>(co + r) * len;
      float b = bias ? bias[co + r] : 0.0f;
      for (int l = 0; l < len; ++l) zr[l] = b;
    }
    for (int ci = 0; ci < cin; ++ci) {
      const float* ur = u + static_cast<std::size_t>(ci) * len;
      const float* w = wp + static_cast<std::size_t>(ci) * 3 * cout;
      for (int r = 0; r < nb; ++r) {
        float w0 = w[0 * cout + co + r];
        float w1 = w[1 * cout + co + r];
        float w2 = w[2 * cout + co + r];
        float* zr = z + static_cast<std::size_t>(co + r) * len;
#pragma omp simd
        for (int l = 1; l < len - 1; ++l)
          zr[l] += w0 * ur[l - 1] + w1 * ur[l] + w2 * ur[l + 1];
        zr[0] += w1 * ur[0] + w2 * ur[1];
        zr[len - 1] += w0 * ur[len - 2] + w1 * ur[len - 1];
      }
    }
  }
}

void conv3_grad_weights_f32(const float* u, const float* gz, float* gw,
                            float* gbias, int cin, int cout, int len) {
  conv3_grad_weights_ref(u, gz, gw, gbias, cin, cout, len);
}

#endif

}  // namespace photonids::nn::kernels
