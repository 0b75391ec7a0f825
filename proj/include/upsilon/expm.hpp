#pragma once

// Dense matrix exponential: scaling-and-squaring with a degree-13 Pade core
// (Higham 2005). Backward error is ~machine precision for ||A|| <= theta13;
// larger norms are halved s times and the result squared back.

#include <Eigen/Dense>
#include <cmath>

namespace upsilon {

inline Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  using Eigen::MatrixXd;
  const int n = static_cast<int>(a.rows());
  if (n == 0) return MatrixXd(0, 0);

  static const double b[] = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
      1187353796428800.0,  129060195264000.0,   10559470521600.0,
      670442572800.0,      33522128640.0,       1323241920.0,
      40840800.0,          960960.0,            16380.0,
      182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;

  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();  // 1-norm
  int squarings = 0;
  MatrixXd as = a;
  if (norm > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
    as /= std::ldexp(1.0, squarings);
  }

  const MatrixXd a2 = as * as;
  const MatrixXd a4 = a2 * a2;
  const MatrixXd a6 = a2 * a4;
  const MatrixXd id = MatrixXd::Identity(n, n);

  const MatrixXd u =
      as * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) +
            b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  const MatrixXd v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) +
                     b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;

  MatrixXd f = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) f = f * f;
  return f;
}

}  // namespace upsilon
