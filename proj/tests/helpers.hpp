// Conversions between library matrices and the oracle's plain matrices.
#pragma once

#include "ghzsim/qcore.hpp"
#include "oracles.hpp"

inline oracle::Mat to_oracle(const ghz::CMatrix& m) {
    oracle::Mat o(static_cast<int>(m.rows()));
    for (int i = 0; i < o.n; ++i)
        for (int j = 0; j < o.n; ++j) o(i, j) = m(i, j);
    return o;
}

inline ghz::CMatrix from_oracle(const oracle::Mat& o) {
    ghz::CMatrix m(o.n, o.n);
    for (int i = 0; i < o.n; ++i)
        for (int j = 0; j < o.n; ++j) m(i, j) = o(i, j);
    return m;
}

inline ghz::DensityMatrix density_from_oracle(const oracle::Mat& o) {
    return ghz::DensityMatrix(from_oracle(o));
}
