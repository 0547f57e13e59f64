#include <stdexcept>

#include "cmrf/model.hpp"

namespace cmrf {

DirectedLabel directed(BoundaryLabel o, bool first_is_i) {
  switch (o) {
    case BoundaryLabel::Coplanar: return DirectedLabel::Coplanar;
    case BoundaryLabel::Hinge: return DirectedLabel::Hinge;
    case BoundaryLabel::LeftOccludes: return first_is_i ? DirectedLabel::FirstFront : DirectedLabel::SecondFront;
    case BoundaryLabel::RightOccludes: return first_is_i ? DirectedLabel::SecondFront : DirectedLabel::FirstFront;
  }
  throw std::invalid_argument("directed: bad label");
}

namespace {

bool is_occlusion(DirectedLabel l) { return l == DirectedLabel::FirstFront || l == DirectedLabel::SecondFront; }

// Segment in front on edge m of a cycle of n segments; edge m joins m and m+1.
int front_of(DirectedLabel l, int m, int n) { return l == DirectedLabel::FirstFront ? m : (m + 1) % n; }

bool junction3_impossible(const std::array<DirectedLabel, 3>& l) {
  int occ = 0, co = 0, hi = 0;
  for (DirectedLabel x : l) {
    occ += is_occlusion(x);
    co += x == DirectedLabel::Coplanar;
    hi += x == DirectedLabel::Hinge;
  }
  if (occ == 3) {
    // cyclic: every segment is in front exactly once
    return front_of(l[0], 0, 3) != front_of(l[1], 1, 3) && front_of(l[1], 1, 3) != front_of(l[2], 2, 3) &&
           front_of(l[2], 2, 3) != front_of(l[0], 0, 3);
  }
  if (occ == 2) {
    // the two occlusion edges share one segment; it may not be in front on one
    // edge and behind on the other
    int e1 = -1, e2 = -1;
    for (int m = 0; m < 3; ++m)
      if (is_occlusion(l[m])) (e1 < 0 ? e1 : e2) = m;
    const int shared = (e2 == e1 + 1) ? e2 : e1;  // edges (0,1) share 1, (1,2) share 2, (0,2) share 0
    const bool front1 = front_of(l[e1], e1, 3) == shared;
    const bool front2 = front_of(l[e2], e2, 3) == shared;
    return front1 != front2;
  }
  if (occ == 1) {
    if (co == 2 || hi == 2) return true;
    int e = 0;
    while (!is_occlusion(l[e])) ++e;
    // the occlusion edge's endpoint that also carries the coplanar edge
    const int co_edge = l[(e + 1) % 3] == DirectedLabel::Coplanar ? (e + 1) % 3 : (e + 2) % 3;
    const int co_member = co_edge == (e + 1) % 3 ? (e + 1) % 3 : e;
    return front_of(l[e], e, 3) == co_member;
  }
  return co == 2 && hi == 1;
}

bool junction4_valid(const std::array<DirectedLabel, 4>& l) {
  auto all = [&](DirectedLabel x) {
    for (DirectedLabel y : l)
      if (y != x) return false;
    return true;
  };
  if (all(DirectedLabel::Coplanar)) return true;
  for (int first = 0; first < 2; ++first) {
    const int a = first, b = first + 2;        // coplanar pair
    const int c = first + 1, d = (first + 3) % 4;  // crossing pair
    if (l[a] != DirectedLabel::Coplanar || l[b] != DirectedLabel::Coplanar) continue;
    if (l[c] == DirectedLabel::Hinge && l[d] == DirectedLabel::Hinge) return true;
    if (is_occlusion(l[c]) && is_occlusion(l[d])) {
      // coplanar edges a and b merge segments {a, a+1} and {b, b+1}
      auto group = [&](int s) { return (s == a || s == (a + 1) % 4) ? 0 : 1; };
      if (group(front_of(l[c], c, 4)) == group(front_of(l[d], d, 4))) return true;
    }
  }
  return false;
}

std::array<bool, 64> make_table3() {
  std::array<bool, 64> t{};
  for (int idx = 0; idx < 64; ++idx)
    t[idx] = junction3_impossible(
        {DirectedLabel(idx / 16), DirectedLabel((idx / 4) % 4), DirectedLabel(idx % 4)});
  return t;
}

std::array<bool, 256> make_table4() {
  std::array<bool, 256> t{};
  for (int idx = 0; idx < 256; ++idx)
    t[idx] = junction4_valid({DirectedLabel(idx / 64), DirectedLabel((idx / 16) % 4), DirectedLabel((idx / 4) % 4),
                              DirectedLabel(idx % 4)});
  return t;
}

}  // namespace

const std::array<bool, 64>& junction3_impossible_table() {
  static const std::array<bool, 64> table = make_table3();
  return table;
}

const std::array<bool, 256>& junction4_valid_table() {
  static const std::array<bool, 256> table = make_table4();
  return table;
}

double phi_junction3(const std::array<DirectedLabel, 3>& l, double lambda_imp) {
  const int idx = int(l[0]) * 16 + int(l[1]) * 4 + int(l[2]);
  return junction3_impossible_table()[idx] ? lambda_imp : 0.0;
}

double phi_junction4(const std::array<DirectedLabel, 4>& l, const std::array<BoundaryOrientation, 4>& orientation,
                     double lambda_imp) {
  if (orientation[0] != orientation[2] || orientation[1] != orientation[3] || orientation[0] == orientation[1])
    throw std::invalid_argument("phi_junction4: opposite boundaries must share an orientation");
  const int idx = int(l[0]) * 64 + int(l[1]) * 16 + int(l[2]) * 4 + int(l[3]);
  return junction4_valid_table()[idx] ? 0.0 : lambda_imp;
}

}  // namespace cmrf
