#pragma once

// Signed axis permutations: the 48 orthogonal maps that are exact symmetries of a cubic grid.

#include <array>
#include <vector>

#include "linalg.hpp"

namespace vdarwin {

// (Q v)_i = sign[i] * v[perm[i]].
struct SignedPermutation {
  std::array<int, 3> perm{0, 1, 2};
  std::array<int, 3> sign{1, 1, 1};

  Vec3 apply(const Vec3& v) const {
    return {sign[0] * v[perm[0]], sign[1] * v[perm[1]], sign[2] * v[perm[2]]};
  }

  // Q^T = Q^{-1}.
  SignedPermutation inverse() const {
    SignedPermutation q;
    for (int i = 0; i < 3; ++i) {
      q.perm[perm[i]] = i;
      q.sign[perm[i]] = sign[i];
    }
    return q;
  }

  Mat3 matrix() const {
    Mat3 m;
    for (int i = 0; i < 3; ++i) m(i, perm[i]) = sign[i];
    return m;
  }

  bool is_identity() const { return perm == std::array{0, 1, 2} && sign == std::array{1, 1, 1}; }
};

inline const std::vector<SignedPermutation>& all_signed_permutations() {
  static const std::vector<SignedPermutation> group = [] {
    std::vector<SignedPermutation> g;
    const std::array<std::array<int, 3>, 6> perms{{{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    for (const auto& p : perms)
      for (int s = 0; s < 8; ++s)
        g.push_back({p, {(s & 1) ? -1 : 1, (s & 2) ? -1 : 1, (s & 4) ? -1 : 1}});
    return g;
  }();
  return group;
}

}  // namespace vdarwin
