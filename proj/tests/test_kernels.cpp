#include <gtest/gtest.h>

#include <omp.h>

#include "loyalty/kernels.hpp"
#include "test_support.hpp"

using namespace loyalty;
using testing_support::random_matrix;

namespace {

struct Shape {
  std::size_t n, in, out;
};

// Large enough to cross the OpenMP work threshold, plus a small one that stays serial.
const Shape kShapes[] = {{3, 4, 2}, {700, 210, 10}, {2048, 10, 10}, {64, 300, 64}};

}  // namespace

TEST(Kernels, OmpMatchesSerialBitwise) {
  omp_set_num_threads(4);
  std::mt19937_64 rng(7);
  for (const auto& s : kShapes) {
    const auto in = random_matrix(s.n, s.in, rng);
    const auto w = random_matrix(s.in, s.out, rng);
    const auto bias = random_matrix(1, s.out, rng).data;
    const auto d_out = random_matrix(s.n, s.out, rng);

    Matrix a, b;
    kernels::serial::affine_forward(in, w, bias, a);
    kernels::omp::affine_forward(in, w, bias, b);
    EXPECT_EQ(a, b);

    Matrix dw_a, dw_b;
    std::vector<double> db_a(s.out), db_b(s.out);
    kernels::serial::affine_backward_params(in, d_out, dw_a, db_a);
    kernels::omp::affine_backward_params(in, d_out, dw_b, db_b);
    EXPECT_EQ(dw_a, dw_b);
    EXPECT_EQ(db_a, db_b);

    Matrix di_a, di_b;
    kernels::serial::affine_backward_input(d_out, w, di_a);
    kernels::omp::affine_backward_input(d_out, w, di_b);
    EXPECT_EQ(di_a, di_b);

    auto t_a = a, t_b = a;
    kernels::serial::tanh_inplace(t_a);
    kernels::omp::tanh_inplace(t_b);
    EXPECT_EQ(t_a, t_b);

    auto g_a = d_out, g_b = d_out;
    kernels::serial::tanh_backward(t_a, g_a);
    kernels::omp::tanh_backward(t_b, g_b);
    EXPECT_EQ(g_a, g_b);

    Matrix p_a, p_b;
    kernels::serial::softmax_rows(a, p_a);
    kernels::omp::softmax_rows(a, p_b);
    EXPECT_EQ(p_a, p_b);
  }
}

TEST(Kernels, AffineForwardSmallExample) {
  Matrix in(1, 2);
  in.data = {1, 2};
  Matrix w(2, 2);
  w.data = {1, 2, 3, 4};
  const std::vector<double> b = {0.5, -1};
  Matrix out;
  kernels::serial::affine_forward(in, w, b, out);
  EXPECT_EQ(out.data, (std::vector<double>{7.5, 9}));
}

TEST(Kernels, SoftmaxRowsSumToOne) {
  std::mt19937_64 rng(3);
  auto logits = random_matrix(500, 2, rng, 50.0);
  logits(0, 0) = 700;
  logits(0, 1) = -700;
  Matrix p;
  kernels::serial::softmax_rows(logits, p);
  for (std::size_t r = 0; r < p.rows; ++r) {
    EXPECT_NEAR(p(r, 0) + p(r, 1), 1.0, 1e-12);
    EXPECT_GE(p(r, 0), 0.0);
  }
  Matrix same(1, 2, 3.25);
  kernels::serial::softmax_rows(same, p);
  EXPECT_EQ(p.data, (std::vector<double>{0.5, 0.5}));
}
