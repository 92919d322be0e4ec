#include "folomin/sparsity.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace folomin;

TEST_SUITE("sparsity") {

TEST_CASE("cone neighborhood by hand cosines") {
  Matrix A(3, 2);
  A << 1, 0, 0, 1, 0.6, 0.8;
  CHECK(cone_neighborhood(A, 2, 0.05) == IndexSet{2});
  // cos(a_3, e_2) = 0.8 is inside a cone of slack 0.2.
  CHECK(cone_neighborhood(A, 2, 0.2) == IndexSet{1, 2});
}

TEST_CASE("zero row has an empty cone") {
  Matrix A(3, 2);
  A << 1, 0, 0, 0, 1, 1;
  CHECK(cone_neighborhood(A, 1, 0.5).empty());
  CHECK(cone_neighborhood(A, 1, 2.0).empty());
}

TEST_CASE("simple row cone at zero slack is its simple set") {
  const Matrix A = test::mixed_row_matrix();
  CHECK(cone_neighborhood(A, 1, 0.0) == IndexSet{0, 1, 2});
  CHECK(cone_neighborhood(A, 4, 0.0) == IndexSet{3, 4, 5});
}

TEST_CASE("cone neighborhood is invariant to row rescaling") {
  Matrix A(4, 3);
  A << 1, 0.2, 0, 0.9, 0.1, 0.05, 0, 1, 1, -2, -0.4, 0;
  const IndexSet before = cone_neighborhood(A, 0, 0.02);
  Matrix B = A;
  B.row(1) *= -3.5;
  B.row(3) *= 0.01;
  CHECK(cone_neighborhood(B, 0, 0.02) == before);
}

TEST_CASE("cone neighborhood argument checks") {
  Matrix A = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(cone_neighborhood(A, 2, 0.1), UsageError);
  CHECK_THROWS_AS(cone_neighborhood(A, 0, -0.1), UsageError);
  CHECK_THROWS_AS(cone_neighborhood(A, 0, 2.5), UsageError);
}

TEST_CASE("stacked identity is perfectly simple") {
  const SparsityProfile p = detect_simple_rows(test::stacked_identity(3, 2));
  REQUIRE(p.simple_sets.size() == 3);
  for (Index l = 0; l < 3; ++l) CHECK(p.simple_sets[l] == IndexSet{l, l + 3});
  CHECK(p.non_simple.empty());
  CHECK(p.lambda_min.value() == 1.0);
  CHECK(p.row_norm_max == 1.0);
}

TEST_CASE("mixed-row matrix profile") {
  const SparsityProfile p = detect_simple_rows(test::mixed_row_matrix());
  CHECK(p.simple_sets[0] == IndexSet{0, 1, 2});
  CHECK(p.simple_sets[1] == IndexSet{3, 4, 5});
  CHECK(p.non_simple == IndexSet{6});
  CHECK(p.lambda_min.value() == doctest::Approx(0.3));
  // sigma_tilde: |S|^{-1} min_l sum a_jl^2 = 3 / 6.
  CHECK(p.sigma_tilde_q_inv == doctest::Approx(0.5));
}

TEST_CASE("all-zero matrix") {
  const SparsityProfile p = detect_simple_rows(Matrix::Zero(4, 2));
  CHECK(p.simple_sets[0].empty());
  CHECK(p.simple_sets[1].empty());
  CHECK(p.non_simple.empty());
  CHECK(p.zero_rows.size() == 4);
  CHECK_FALSE(p.lambda_min.has_value());
  CHECK_THROWS_AS(detect_simple_rows(Matrix::Ones(3, 1)), UsageError);
}

TEST_CASE("sigma_q by direct eigenvalue computation") {
  Matrix A(6, 3);
  A << 1, 0, 0, 0, 1.5, 0, 0, 0, 2, 0, 0.5, 0.7, 0.4, 0, 0.9, 0.3, 0.8, 0;
  const SparsityProfile p = detect_simple_rows(A);
  double expected = 1e300;
  for (Index l = 0; l < 3; ++l) {
    Matrix sub(0, 3);
    for (Index j = 0; j < 6; ++j) {
      if (A(j, l) == 0.0) {
        sub.conservativeResize(sub.rows() + 1, 3);
        sub.row(sub.rows() - 1) = A.row(j);
      }
    }
    const Matrix gram = sub.transpose() * sub / 6.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    expected = std::min(expected, es.eigenvalues()(1));  // second largest of three = lambda_{r-1}
  }
  CHECK(p.sigma_q_inv == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("column permutation and sign flips permute the profile") {
  const Matrix A = test::mixed_row_matrix();
  Matrix B(A.rows(), 2);
  B.col(0) = -A.col(1);
  B.col(1) = A.col(0);
  const SparsityProfile pa = detect_simple_rows(A), pb = detect_simple_rows(B);
  CHECK(pb.simple_sets[0] == pa.simple_sets[1]);
  CHECK(pb.simple_sets[1] == pa.simple_sets[0]);
  CHECK(pb.non_simple == pa.non_simple);
}

TEST_CASE("is_sparse clauses") {
  CHECK(is_sparse(test::stacked_identity(3, 2), 0.5, 0.3, 2.0).sparse);

  Matrix weak = test::stacked_identity(2, 2);
  weak.conservativeResize(5, 2);
  weak.row(4) << 0.05, 1.0;
  const SparsityCheck c = is_sparse(weak, 0.1, 0.01, 2.0);
  CHECK_FALSE(c.sparse);
  CHECK(c.violated == SparsityClause::SignalStrength);
  CHECK(c.row.value() == 4);

  const SparsityCheck m = is_sparse(test::mixed_row_matrix(), 0.3, 0.01, 2.0);
  CHECK(m.sparse);
  CHECK(m.max_nonsimple_cone == 1);
  CHECK(m.min_simple_set == 3);

  const SparsityCheck big = is_sparse(2.5 * test::stacked_identity(2, 2), 0.5, 0.1, 2.0);
  CHECK(big.violated == SparsityClause::RowNorm);

  // Three identical mixed rows outnumber the smallest simple set of size 2.
  Matrix crowded = test::stacked_identity(2, 2);
  crowded.conservativeResize(7, 2);
  for (Index j = 4; j < 7; ++j) crowded.row(j) << 0.6, 0.8;
  CHECK(is_sparse(crowded, 0.5, 0.01, 2.0).violated == SparsityClause::AngularSeparation);
}

}  // TEST_SUITE
