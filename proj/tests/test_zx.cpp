#include <functional>
#include <random>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "qsurg/groupalg.hpp"
#include "qsurg/zx.hpp"

using namespace qsurg;
using namespace qsurg::zx;

namespace {

const double kTight = 1e-12;
const double kLoose = 1e-9;

Mat kron_power(const Mat& m, int count) {
  Mat acc = Mat::identity(1);
  for (int k = 0; k < count; ++k) acc = acc.kron(m);
  return acc;
}

Mat swap_matrix(int d) {
  Mat sw(d * d, d * d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) sw.at(a * d + b, b * d + a) = 1.0;
  return sw;
}

bool equal_tight(const Mat& a, const Mat& b, double tol = kTight) {
  return a.rows == b.rows && a.cols == b.cols && (a - b).max_abs() < tol;
}

// b == s * a for some |s| bounded away from zero
bool proportional(const Mat& a, const Mat& b, double tol) {
  if (a.rows != b.rows || a.cols != b.cols) return false;
  Cx dot = 0.0;
  double n2 = 0.0;
  for (size_t k = 0; k < a.a.size(); ++k) {
    dot += std::conj(a.a[k]) * b.a[k];
    n2 += std::norm(a.a[k]);
  }
  if (n2 < tol) return false;
  Cx s = dot / n2;
  if (std::abs(s) < tol) return false;
  return (b - a.scaled(s)).max_abs() <= tol * std::max(1.0, std::abs(s));
}

Cx determinant(const Mat& m) {
  REQUIRE(m.rows == m.cols);
  if (m.rows == 1) return m.at(0, 0);
  if (m.rows == 2)
    return m.at(0, 0) * m.at(1, 1) - m.at(0, 1) * m.at(1, 0);
  REQUIRE(m.rows == 3);
  return m.at(0, 0) * (m.at(1, 1) * m.at(2, 2) - m.at(1, 2) * m.at(2, 1)) -
         m.at(0, 1) * (m.at(1, 0) * m.at(2, 2) - m.at(1, 2) * m.at(2, 0)) +
         m.at(0, 2) * (m.at(1, 0) * m.at(2, 1) - m.at(1, 1) * m.at(2, 0));
}

bool unitary_proportional(const Mat& m, double tol) {
  Mat b = m.adjoint() * m;
  Cx tr = 0.0;
  for (int i = 0; i < b.rows; ++i) tr += b.at(i, i);
  Cx c = tr / double(b.rows);
  if (std::abs(c) < tol) return false;
  return (b - Mat::identity(b.rows).scaled(c)).max_abs() <=
         tol * std::max(1.0, std::abs(c));
}

Diagram wire_diagram(int d) {
  Diagram g;
  g.d = d;
  g.num_inputs = 1;
  g.num_outputs = 1;
  g.connect({kDiagramInput, 0}, {kDiagramOutput, 0});
  g.validate();
  return g;
}

Match pick(const std::vector<Match>& ms,
           const std::function<bool(const Match&)>& f) {
  for (const Match& m : ms)
    if (f(m)) return m;
  REQUIRE(false);
  return ms.at(0);
}

}  // namespace

TEST_CASE("generator matrices") {
  for (int d : {2, 3, 5}) {
    Mat h = fourier_matrix(d, false);
    Mat hd = fourier_matrix(d, true);

    // the Fourier node is unitary with the advertised entries
    CHECK(equal_tight(h * hd, Mat::identity(d)));
    CHECK(equal_tight(hd, h.adjoint()));
    for (int k = 0; k < d; ++k)
      for (int j = 0; j < d; ++j)
        CHECK(std::abs(h.at(k, j) -
                       omega(d, -static_cast<long long>(j) * k) /
                           std::sqrt(double(d))) < kTight);

    Mat s = antipode_matrix(d);
    for (int i = 0; i < d; ++i)
      CHECK(std::abs(s.at(mod_d(-i, d), i) - 1.0) < kTight);
    CHECK(equal_tight(s * s, Mat::identity(d)));
    CHECK(equal_tight(h * h, s));

    // green spiders: diagonal copy tensors with a phase
    for (int a = 0; a < d; ++a) {
      Mat g11 = green_matrix(d, 1, 1, a);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          CHECK(std::abs(g11.at(i, j) -
                         (i == j ? omega(d, static_cast<long long>(a) * i)
                                 : Cx(0.0))) < kTight);
    }
    Mat g21 = green_matrix(d, 2, 1, 0);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          CHECK(std::abs(g21.at(k, i * d + j) -
                         Cx(i == j && j == k ? 1.0 : 0.0)) < kTight);
    CHECK(std::abs(green_matrix(d, 0, 0, 0).at(0, 0) - Cx(double(d))) < kTight);

    // red spiders are exactly the Fourier-conjugated green spiders
    for (auto [m, n] : std::vector<std::pair<int, int>>{
             {0, 1}, {1, 0}, {1, 1}, {1, 2}, {2, 1}, {2, 2}}) {
      for (int b = 0; b < d; ++b) {
        Mat red = red_matrix(d, m, n, b);
        Mat conj = kron_power(h, n) * green_matrix(d, m, n, b) *
                   kron_power(hd, m);
        CHECK(equal_tight(red, conj, 1e-11));
        // and the normalized indicator closed form
        double scale = std::pow(double(d), 1.0 - 0.5 * (m + n));
        for (int row = 0; row < red.rows; ++row)
          for (int col = 0; col < red.cols; ++col) {
            long long si = 0, so = 0;
            int r = row, c = col;
            for (int k = 0; k < n; ++k) { so += r % d; r /= d; }
            for (int k = 0; k < m; ++k) { si += c % d; c /= d; }
            Cx want = mod_d(si + b - so, d) == 0 ? Cx(scale) : Cx(0.0);
            CHECK(std::abs(red.at(row, col) - want) < 1e-11);
          }
      }
    }
    CHECK(equal_tight(red_matrix(d, 1, 1, 1),
                      groupalg::gate(groupalg::GateKind::X, d, 1), 1e-11));

    Mat cup = cup_matrix(d);
    Mat cap = cap_matrix(d);
    REQUIRE(cup.rows == d * d);
    REQUIRE(cap.cols == d * d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        Cx want = mod_d(a + b, d) == 0 ? Cx(1.0) : Cx(0.0);
        CHECK(std::abs(cup.at(a * d + b, 0) - want) < kTight);
        CHECK(std::abs(cap.at(0, a * d + b) - want) < kTight);
      }

    // node_matrix agrees and rejects bad arities
    CHECK(equal_tight(node_matrix({NodeKind::Green, 2, 1, 1, false}, d),
                      green_matrix(d, 2, 1, 1)));
    CHECK(equal_tight(node_matrix({NodeKind::Fourier, 1, 1, 0, true}, d), hd));
    CHECK_THROWS_AS(node_matrix({NodeKind::Fourier, 2, 1, 0, false}, d),
                    std::invalid_argument);
    CHECK_THROWS_AS(node_matrix({NodeKind::Antipode, 2, 2, 0, false}, d),
                    std::invalid_argument);
    CHECK_THROWS_AS(node_matrix({NodeKind::Cup, 1, 2, 0, false}, d),
                    std::invalid_argument);
    CHECK_THROWS_AS(node_matrix({NodeKind::Cap, 0, 2, 0, false}, d),
                    std::invalid_argument);
  }
}

TEST_CASE("evaluation conventions") {
  const int d = 3;

  CHECK(equal_tight(evaluate(wire_diagram(d)), Mat::identity(d)));

  Diagram scaled = wire_diagram(d);
  scaled.scalar = Cx(0.0, 2.0);
  CHECK(equal_tight(evaluate(scaled), Mat::identity(d).scaled(Cx(0.0, 2.0))));

  // single node
  Diagram single;
  single.d = d;
  single.num_inputs = 1;
  single.num_outputs = 2;
  int n0 = single.add_node(NodeKind::Green, 1, 2, 2);
  single.connect({kDiagramInput, 0}, {n0, 0});
  single.connect({n0, 0}, {kDiagramOutput, 0});
  single.connect({n0, 1}, {kDiagramOutput, 1});
  single.validate();
  CHECK(equal_tight(evaluate(single), green_matrix(d, 1, 2, 2)));

  // parallel wires: boundary 0 is the most significant digit on both sides
  Diagram par;
  par.d = d;
  par.num_inputs = 2;
  par.num_outputs = 2;
  int pa = par.add_node(NodeKind::Green, 1, 1, 1);
  int pb = par.add_node(NodeKind::Green, 1, 1, 2);
  par.connect({kDiagramInput, 0}, {pa, 0});
  par.connect({kDiagramInput, 1}, {pb, 0});
  par.connect({pa, 0}, {kDiagramOutput, 0});
  par.connect({pb, 0}, {kDiagramOutput, 1});
  par.validate();
  CHECK(equal_tight(evaluate(par),
                    green_matrix(d, 1, 1, 1).kron(green_matrix(d, 1, 1, 2))));

  // crossing wires permutes the column digits
  Diagram cross;
  cross.d = d;
  cross.num_inputs = 2;
  cross.num_outputs = 2;
  int ca = cross.add_node(NodeKind::Green, 1, 1, 1);
  int cb = cross.add_node(NodeKind::Green, 1, 1, 2);
  cross.connect({kDiagramInput, 0}, {ca, 0});
  cross.connect({kDiagramInput, 1}, {cb, 0});
  cross.connect({ca, 0}, {kDiagramOutput, 1});
  cross.connect({cb, 0}, {kDiagramOutput, 0});
  cross.validate();
  CHECK(equal_tight(
      evaluate(cross),
      green_matrix(d, 1, 1, 2).kron(green_matrix(d, 1, 1, 1)) *
          swap_matrix(d)));

  // snake straightens to the identity
  Diagram snake;
  snake.d = d;
  snake.num_inputs = 1;
  snake.num_outputs = 1;
  int cu = snake.add_node(NodeKind::Cup, 0, 2);
  int cp = snake.add_node(NodeKind::Cap, 2, 0);
  snake.connect({kDiagramInput, 0}, {cp, 0});
  snake.connect({cu, 0}, {cp, 1});
  snake.connect({cu, 1}, {kDiagramOutput, 0});
  snake.validate();
  CHECK(equal_tight(evaluate(snake), Mat::identity(d)));

  // a closed circle counts the group order
  Diagram circle;
  circle.d = d;
  int cu2 = circle.add_node(NodeKind::Cup, 0, 2);
  int cp2 = circle.add_node(NodeKind::Cap, 2, 0);
  circle.connect({cu2, 0}, {cp2, 0});
  circle.connect({cu2, 1}, {cp2, 1});
  circle.validate();
  Mat val = evaluate(circle);
  REQUIRE(val.rows == 1);
  CHECK(std::abs(val.at(0, 0) - Cx(double(d))) < kTight);

  // directed cycles cannot be contracted
  Diagram loop;
  loop.d = d;
  int la = loop.add_node(NodeKind::Green, 1, 1, 0);
  int lb = loop.add_node(NodeKind::Green, 1, 1, 0);
  loop.connect({la, 0}, {lb, 0});
  loop.connect({lb, 0}, {la, 0});
  loop.validate();
  CHECK_THROWS_AS(evaluate(loop), std::runtime_error);
}

TEST_CASE("diagram validation") {
  const int d = 3;
  Diagram g;
  g.d = d;
  g.num_inputs = 1;
  g.num_outputs = 1;
  int v = g.add_node(NodeKind::Green, 1, 1, 0);
  g.connect({kDiagramInput, 0}, {v, 0});
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);  // uncovered ports
  g.connect({v, 0}, {kDiagramOutput, 0});
  CHECK_NOTHROW(g.validate());

  Diagram twice = g;
  twice.wires.push_back({{v, 0}, {kDiagramOutput, 0}});
  CHECK_THROWS_AS(twice.validate(), std::invalid_argument);

  Diagram badport = g;
  badport.wires[0].to.port = 5;
  CHECK_THROWS_AS(badport.validate(), std::invalid_argument);

  Diagram negative;
  negative.d = d;
  negative.num_inputs = -1;
  CHECK_THROWS_AS(negative.validate(), std::invalid_argument);

  Diagram badarity;
  badarity.d = d;
  badarity.nodes.push_back({NodeKind::Cup, 1, 1, 0, false});
  badarity.wires.push_back({{0, 0}, {0, 0}});
  CHECK_THROWS_AS(badarity.validate(), std::invalid_argument);
}

TEST_CASE("isomorphism is structural") {
  const int d = 3;
  Diagram a = cx_diagram(d, 1);

  // same graph, nodes added in the opposite order
  Diagram b;
  b.d = d;
  b.num_inputs = 2;
  b.num_outputs = 2;
  int mg = b.add_node(NodeKind::Red, 2, 1, 0);
  int cp = b.add_node(NodeKind::Green, 1, 2, 0);
  b.connect({kDiagramInput, 0}, {cp, 0});
  b.connect({cp, 1}, {kDiagramOutput, 0});
  b.connect({cp, 0}, {mg, 0});
  b.connect({kDiagramInput, 1}, {mg, 1});
  b.connect({mg, 0}, {kDiagramOutput, 1});
  b.validate();
  CHECK(isomorphic(a, b));
  CHECK(isomorphic(b, a));

  CHECK(!isomorphic(a, cx_diagram(d, 2)));

  Diagram phase = a;
  phase.nodes[0].phase = 1;
  CHECK(!isomorphic(a, phase));

  // boundary order matters
  Diagram swapped = a;
  for (Wire& w : swapped.wires) {
    if (w.to.node == kDiagramOutput) w.to.port = 1 - w.to.port;
  }
  CHECK(!isomorphic(a, swapped));
}

TEST_CASE("spider fusion") {
  const int d = 3;
  Diagram g;
  g.d = d;
  g.num_inputs = 1;
  g.num_outputs = 1;
  int n1 = g.add_node(NodeKind::Green, 1, 1, 1);
  int n2 = g.add_node(NodeKind::Green, 1, 1, 2);
  g.connect({kDiagramInput, 0}, {n1, 0});
  g.connect({n1, 0}, {n2, 0});
  g.connect({n2, 0}, {kDiagramOutput, 0});
  g.validate();

  auto ms = find_matches(g, RewriteRule::SpiderFuse);
  REQUIRE(!ms.empty());
  Diagram h = apply_match(g, ms[0]);
  CHECK_NOTHROW(h.validate());
  CHECK(h.nodes.size() == 1);
  CHECK(mod_d(h.nodes[0].phase, d) == 0);  // 1 + 2 == 0 mod 3
  CHECK(equal_tight(evaluate(h), evaluate(g)));

  // red spiders fuse the same way
  Diagram r;
  r.d = d;
  r.num_inputs = 2;
  r.num_outputs = 1;
  int r1 = r.add_node(NodeKind::Red, 2, 1, 1);
  int r2 = r.add_node(NodeKind::Red, 1, 1, 1);
  r.connect({kDiagramInput, 0}, {r1, 0});
  r.connect({kDiagramInput, 1}, {r1, 1});
  r.connect({r1, 0}, {r2, 0});
  r.connect({r2, 0}, {kDiagramOutput, 0});
  r.validate();
  auto rms = find_matches(r, RewriteRule::SpiderFuse);
  REQUIRE(!rms.empty());
  Diagram rh = apply_match(r, rms[0]);
  CHECK(rh.nodes.size() == 1);
  CHECK(rh.nodes[0].phase == 2);
  CHECK(equal_tight(evaluate(rh), evaluate(r), 1e-11));
}

TEST_CASE("identity removal and insertion") {
  const int d = 3;
  Diagram g;
  g.d = d;
  g.num_inputs = 1;
  g.num_outputs = 1;
  int v = g.add_node(NodeKind::Green, 1, 1, 0);
  g.connect({kDiagramInput, 0}, {v, 0});
  g.connect({v, 0}, {kDiagramOutput, 0});
  g.validate();
  Match fw = pick(find_matches(g, RewriteRule::IdentityRemove),
                  [](const Match& m) { return !m.reverse; });
  Diagram h = apply_match(g, fw);
  CHECK(h.nodes.empty());
  CHECK(equal_tight(evaluate(h), Mat::identity(d)));

  // inverse Fourier pair melts away
  Diagram f;
  f.d = d;
  f.num_inputs = 1;
  f.num_outputs = 1;
  int f1 = f.add_node(NodeKind::Fourier, 1, 1, 0, false);
  int f2 = f.add_node(NodeKind::Fourier, 1, 1, 0, true);
  f.connect({kDiagramInput, 0}, {f1, 0});
  f.connect({f1, 0}, {f2, 0});
  f.connect({f2, 0}, {kDiagramOutput, 0});
  f.validate();
  Match fm = pick(find_matches(f, RewriteRule::IdentityRemove),
                  [](const Match& m) { return !m.reverse; });
  Diagram fh = apply_match(f, fm);
  CHECK(fh.nodes.empty());
  CHECK(equal_tight(evaluate(fh), Mat::identity(d)));

  // reverse: insert an identity spider on a bare wire
  Diagram w = wire_diagram(d);
  Match rev = pick(find_matches(w, RewriteRule::IdentityRemove),
                   [](const Match& m) { return m.reverse; });
  Diagram wi = apply_match(w, rev);
  CHECK(wi.nodes.size() == 1);
  CHECK(equal_tight(evaluate(wi), Mat::identity(d)));
}

TEST_CASE("colour change wraps a spider in Fourier nodes") {
  const int d = 3;
  for (int phase : {0, 1, 2}) {
    Diagram g;
    g.d = d;
    g.num_inputs = 1;
    g.num_outputs = 2;
    int v = g.add_node(NodeKind::Red, 1, 2, phase);
    g.connect({kDiagramInput, 0}, {v, 0});
    g.connect({v, 0}, {kDiagramOutput, 0});
    g.connect({v, 1}, {kDiagramOutput, 1});
    g.validate();
    Mat before = evaluate(g);

    Match fw = pick(find_matches(g, RewriteRule::ColorChange),
                    [](const Match& m) { return !m.reverse; });
    Diagram h = apply_match(g, fw);
    CHECK_NOTHROW(h.validate());
    int greens = 0, reds = 0, fouriers = 0;
    for (const Node& n : h.nodes) {
      greens += n.kind == NodeKind::Green;
      reds += n.kind == NodeKind::Red;
      fouriers += n.kind == NodeKind::Fourier;
    }
    CHECK(greens == 1);
    CHECK(reds == 0);
    CHECK(fouriers == 3);
    CHECK(equal_tight(evaluate(h), before, 1e-11));

    // and back: the green spider turns red again
    Match rv = pick(find_matches(h, RewriteRule::ColorChange),
                    [](const Match& m) { return m.reverse; });
    Diagram back = apply_match(h, rv);
    CHECK(equal_tight(evaluate(back), before, 1e-11));
  }
}

TEST_CASE("bialgebra commutes merge past split") {
  for (int d : {2, 3}) {
    Diagram g;
    g.d = d;
    g.num_inputs = 2;
    g.num_outputs = 2;
    int gm = g.add_node(NodeKind::Green, 2, 1, 0);
    int rs = g.add_node(NodeKind::Red, 1, 2, 0);
    g.connect({kDiagramInput, 0}, {gm, 0});
    g.connect({kDiagramInput, 1}, {gm, 1});
    g.connect({gm, 0}, {rs, 0});
    g.connect({rs, 0}, {kDiagramOutput, 0});
    g.connect({rs, 1}, {kDiagramOutput, 1});
    g.validate();
    Mat before = evaluate(g);

    Match fw = pick(find_matches(g, RewriteRule::Bialgebra),
                    [](const Match& m) { return !m.reverse; });
    Diagram h = apply_match(g, fw);
    CHECK_NOTHROW(h.validate());
    CHECK(h.nodes.size() == 4);
    CHECK(std::abs(h.scalar - Cx(std::sqrt(double(d)))) < kTight);
    CHECK(equal_tight(evaluate(h), before, 1e-11));

    Match rv = pick(find_matches(h, RewriteRule::Bialgebra),
                    [](const Match& m) { return m.reverse; });
    Diagram back = apply_match(h, rv);
    CHECK(back.nodes.size() == 2);
    CHECK(std::abs(back.scalar - Cx(1.0)) < kTight);
    CHECK(equal_tight(evaluate(back), before, 1e-11));
    CHECK(isomorphic(back, g));
  }
}

TEST_CASE("antipode pairs cancel") {
  const int d = 3;
  Diagram g;
  g.d = d;
  g.num_inputs = 1;
  g.num_outputs = 1;
  int s1 = g.add_node(NodeKind::Antipode, 1, 1);
  int s2 = g.add_node(NodeKind::Antipode, 1, 1);
  g.connect({kDiagramInput, 0}, {s1, 0});
  g.connect({s1, 0}, {s2, 0});
  g.connect({s2, 0}, {kDiagramOutput, 0});
  g.validate();
  Match fw = pick(find_matches(g, RewriteRule::AntipodeCancel),
                  [](const Match& m) { return !m.reverse; });
  Diagram h = apply_match(g, fw);
  CHECK(h.nodes.empty());
  CHECK(equal_tight(evaluate(h), Mat::identity(d)));

  // two like Fourier nodes square to the antipode
  Diagram f;
  f.d = d;
  f.num_inputs = 1;
  f.num_outputs = 1;
  int f1 = f.add_node(NodeKind::Fourier, 1, 1, 0, false);
  int f2 = f.add_node(NodeKind::Fourier, 1, 1, 0, false);
  f.connect({kDiagramInput, 0}, {f1, 0});
  f.connect({f1, 0}, {f2, 0});
  f.connect({f2, 0}, {kDiagramOutput, 0});
  f.validate();
  Match fm = pick(find_matches(f, RewriteRule::AntipodeCancel),
                  [](const Match& m) { return !m.reverse; });
  Diagram fh = apply_match(f, fm);
  REQUIRE(fh.nodes.size() == 1);
  CHECK(fh.nodes[0].kind == NodeKind::Antipode);
  CHECK(equal_tight(evaluate(fh), antipode_matrix(d), 1e-11));

  // reverse: expand an antipode
  Match rv = pick(find_matches(fh, RewriteRule::AntipodeCancel),
                  [](const Match& m) { return m.reverse; });
  Diagram exp = apply_match(fh, rv);
  CHECK(equal_tight(evaluate(exp), antipode_matrix(d), 1e-11));
}

TEST_CASE("snakes straighten and circles count") {
  const int d = 3;
  Diagram snake;
  snake.d = d;
  snake.num_inputs = 1;
  snake.num_outputs = 1;
  int cu = snake.add_node(NodeKind::Cup, 0, 2);
  int cp = snake.add_node(NodeKind::Cap, 2, 0);
  snake.connect({kDiagramInput, 0}, {cp, 0});
  snake.connect({cu, 0}, {cp, 1});
  snake.connect({cu, 1}, {kDiagramOutput, 0});
  snake.validate();
  auto ms = find_matches(snake, RewriteRule::CupCapSnake);
  REQUIRE(!ms.empty());
  Diagram h = apply_match(snake, ms[0]);
  CHECK(h.nodes.empty());
  CHECK(equal_tight(evaluate(h), Mat::identity(d)));

  Diagram circle;
  circle.d = d;
  int cu2 = circle.add_node(NodeKind::Cup, 0, 2);
  int cp2 = circle.add_node(NodeKind::Cap, 2, 0);
  circle.connect({cu2, 0}, {cp2, 0});
  circle.connect({cu2, 1}, {cp2, 1});
  circle.validate();
  auto cms = find_matches(circle, RewriteRule::CupCapSnake);
  REQUIRE(!cms.empty());
  Diagram ch = apply_match(circle, cms[0]);
  CHECK(ch.nodes.empty());
  CHECK(std::abs(ch.scalar - Cx(double(d))) < kTight);
  CHECK(std::abs(evaluate(ch).at(0, 0) - Cx(double(d))) < kTight);
}

TEST_CASE("cups expand into spiders with an antipode leg") {
  const int d = 3;
  Diagram g;
  g.d = d;
  g.num_outputs = 2;
  int cu = g.add_node(NodeKind::Cup, 0, 2);
  g.connect({cu, 0}, {kDiagramOutput, 0});
  g.connect({cu, 1}, {kDiagramOutput, 1});
  g.validate();
  Mat before = evaluate(g);

  Match fw = pick(find_matches(g, RewriteRule::CupExpand),
                  [](const Match& m) { return !m.reverse; });
  Diagram h = apply_match(g, fw);
  CHECK_NOTHROW(h.validate());
  bool has_green = false, has_antipode = false;
  for (const Node& n : h.nodes) {
    has_green = has_green || n.kind == NodeKind::Green;
    has_antipode = has_antipode || n.kind == NodeKind::Antipode;
  }
  CHECK(has_green);
  CHECK(has_antipode);
  CHECK(equal_tight(evaluate(h), before, 1e-11));

  Match rv = pick(find_matches(h, RewriteRule::CupExpand),
                  [](const Match& m) { return m.reverse; });
  Diagram back = apply_match(h, rv);
  CHECK(equal_tight(evaluate(back), before, 1e-11));
  CHECK(isomorphic(back, g));
}

TEST_CASE("antipodes slide across cups") {
  const int d = 3;
  Diagram g;
  g.d = d;
  g.num_outputs = 2;
  int cu = g.add_node(NodeKind::Cup, 0, 2);
  int s = g.add_node(NodeKind::Antipode, 1, 1);
  g.connect({cu, 0}, {s, 0});
  g.connect({s, 0}, {kDiagramOutput, 0});
  g.connect({cu, 1}, {kDiagramOutput, 1});
  g.validate();
  Mat before = evaluate(g);

  auto ms = find_matches(g, RewriteRule::AntipodeSlide);
  REQUIRE(!ms.empty());
  Diagram h = apply_match(g, ms[0]);
  CHECK_NOTHROW(h.validate());
  CHECK(equal_tight(evaluate(h), before, 1e-11));
}

TEST_CASE("dual bend turns a cup leg into a spider output") {
  const int d = 3;
  for (NodeKind kind : {NodeKind::Red, NodeKind::Green}) {
    Diagram g;
    g.d = d;
    g.num_inputs = 1;
    g.num_outputs = 2;
    int cu = g.add_node(NodeKind::Cup, 0, 2);
    int sp = g.add_node(kind, 2, 1, 0);
    g.connect({cu, 0}, {sp, 0});
    g.connect({kDiagramInput, 0}, {sp, 1});
    g.connect({sp, 0}, {kDiagramOutput, 0});
    g.connect({cu, 1}, {kDiagramOutput, 1});
    g.validate();
    Mat before = evaluate(g);

    Match fw = pick(find_matches(g, RewriteRule::DualBend),
                    [](const Match& m) { return !m.reverse; });
    Diagram h = apply_match(g, fw);
    CHECK_NOTHROW(h.validate());
    CHECK(equal_tight(evaluate(h), before, 1e-11));
    // the spider lost an input and gained an output
    for (const Node& n : h.nodes)
      if (n.kind == kind) {
        CHECK(n.ins == 1);
        CHECK(n.outs == 2);
      }

    auto rvs = find_matches(h, RewriteRule::DualBend);
    bool reversed = false;
    for (const Match& m : rvs) {
      if (!m.reverse) continue;
      Diagram back = apply_match(h, m);
      CHECK(equal_tight(evaluate(back), before, 1e-11));
      reversed = true;
      break;
    }
    CHECK(reversed);
  }
}

TEST_CASE("random rewrites preserve the tensor exactly") {
  for (int d : {2, 3}) {
    std::mt19937_64 rng(1000 + d);
    int applied = 0;
    for (int iter = 0; iter < 120; ++iter) {
      Diagram g = random_diagram(d, 6, rng);
      std::vector<Match> all;
      for (RewriteRule rule :
           {RewriteRule::SpiderFuse, RewriteRule::IdentityRemove,
            RewriteRule::ColorChange, RewriteRule::Bialgebra,
            RewriteRule::AntipodeCancel, RewriteRule::CupCapSnake,
            RewriteRule::CupExpand, RewriteRule::AntipodeSlide,
            RewriteRule::DualBend}) {
        auto ms = find_matches(g, rule);
        all.insert(all.end(), ms.begin(), ms.end());
      }
      if (all.empty()) continue;
      const Match& m = all[rng() % all.size()];
      Diagram h = apply_match(g, m);
      CHECK_NOTHROW(h.validate());
      Mat a = evaluate(g);
      Mat b = evaluate(h);
      std::string applied_rule = rule_name(m.rule);
      CAPTURE(applied_rule);
      CAPTURE(m.reverse);
      REQUIRE(a.rows == b.rows);
      REQUIRE(a.cols == b.cols);
      CHECK((a - b).max_abs() < kLoose * std::max(1.0, a.max_abs()));
      ++applied;
    }
    CHECK(applied > 60);
  }
}

TEST_CASE("controlled adder presentations") {
  for (int d : {2, 3, 5}) {
    Mat cx = groupalg::gate(groupalg::GateKind::CX, d, 1)
                 .scaled(Cx(1.0 / std::sqrt(double(d)), 0.0));
    for (int v = 1; v <= 4; ++v) {
      Mat got = evaluate(cx_diagram(d, v));
      CHECK(equal_tight(got, cx, 1e-11));
    }
    CHECK_THROWS_AS(cx_diagram(d, 5), std::invalid_argument);

    for (int v = 2; v <= 4; ++v) {
      auto chain = cx_rewrite_chain(d, v);
      REQUIRE(chain.size() >= 2);
      CHECK(chain.front().first == "start");
      Mat want = evaluate(chain.front().second);
      for (const auto& [label, stage] : chain) {
        CHECK(!label.empty());
        CHECK_NOTHROW(stage.validate());
        CHECK(equal_tight(evaluate(stage), want, 1e-11));
      }
      CHECK(isomorphic(chain.back().second, cx_diagram(d, 1)));
    }
    CHECK_THROWS_AS(cx_rewrite_chain(d, 1), std::invalid_argument);
  }
}

TEST_CASE("surgery dictionary rows check out") {
  for (int d : {2, 3}) {
    for (DictRow row :
         {DictRow::SmoothUnit, DictRow::RoughUnit, DictRow::SmoothSplit,
          DictRow::RoughSplit, DictRow::SmoothMerge, DictRow::RoughMerge,
          DictRow::SmoothCounit, DictRow::RoughCounit, DictRow::Rotation}) {
      CAPTURE(dict_row_name(row));
      CAPTURE(d);
      DictionaryCheck chk = verify_dictionary_row(row, d, kLoose);
      CHECK(chk.ok);
      CHECK(std::abs(chk.factor - Cx(dictionary_expected_factor(row, d))) <
            kLoose);
      CHECK(chk.map_error < kLoose);
      CHECK(chk.map.completeness_error < kLoose);
      CHECK(chk.map.proportionality_error < kLoose);
      CHECK(chk.map.leaked_weight < kLoose);

      // the translated diagram contracts to the generator itself
      Diagram dg = from_surgery(dictionary_procedure(row, d));
      CHECK(equal_tight(evaluate(dg), dictionary_generator_matrix(row, d),
                        1e-11));
    }
  }

  // only unit and input builds, and no gates, translate to generators
  surgery::Procedure bad;
  bad.d = 2;
  bad.input_count = 0;
  bad.steps = {surgery::make_build("a", 0, 0, surgery::InitKind::Basis, 0)};
  CHECK_THROWS_AS(from_surgery(bad), std::invalid_argument);
  surgery::Procedure gated;
  gated.d = 2;
  gated.input_count = 1;
  gated.steps = {surgery::make_build("a", 0, 0, surgery::InitKind::Input, 0),
                 surgery::make_gate("a", 'X', 1)};
  CHECK_THROWS_AS(from_surgery(gated), std::invalid_argument);
}

TEST_CASE("phase closure of the dictionary gate set") {
  for (int d : {2, 3}) {
    Mat X = groupalg::gate(groupalg::GateKind::X, d, 1);
    Mat Z = groupalg::gate(groupalg::GateKind::Z, d, 1);
    Mat H = groupalg::gate(groupalg::GateKind::H, d, 1);
    Mat S = groupalg::gate(groupalg::GateKind::S, d, 1);

    std::vector<Mat> weyl = phase_closure({X, Z}, kLoose);
    CHECK(weyl.size() == static_cast<size_t>(d * d));
    CHECK(in_set_up_to_scalar(X * Z, weyl, kLoose));
    CHECK(in_set_up_to_scalar(Z.scaled(Cx(0.0, 1.0)), weyl, kLoose));
    CHECK(!in_set_up_to_scalar(H, weyl, kLoose));

    std::vector<Mat> G = phase_closure({X, Z, H, S}, kLoose);
    CHECK(G.size() == static_cast<size_t>(d == 2 ? 8 : 36));
    for (const Mat& w : weyl) CHECK(in_set_up_to_scalar(w, G, kLoose));
    CHECK(in_set_up_to_scalar(H * X * H.adjoint(), G, kLoose));

    CHECK_THROWS_AS(phase_closure({X, Z, H, S}, kLoose, 4),
                    std::length_error);
  }
}

TEST_CASE("producible single-qudit maps stay inside the closure") {
  for (int d : {2, 3}) {
    Mat X = groupalg::gate(groupalg::GateKind::X, d, 1);
    Mat Z = groupalg::gate(groupalg::GateKind::Z, d, 1);
    Mat H = groupalg::gate(groupalg::GateKind::H, d, 1);
    Mat S = groupalg::gate(groupalg::GateKind::S, d, 1);
    std::vector<Mat> G = phase_closure({X, Z, H, S}, kLoose);

    std::vector<Mat> maps = producible_single_qudit_maps(d, 2);
    CHECK(maps.size() > 4);
    int unitary_like = 0, singular = 0;
    for (const Mat& m : maps) {
      if (unitary_proportional(m, 1e-7)) {
        ++unitary_like;
        CHECK(in_set_up_to_scalar(m, G, 1e-7));
      } else {
        ++singular;
        CHECK(std::abs(determinant(m)) <
              1e-7 * std::max(1.0, std::pow(m.max_abs(), d)));
      }
    }
    CHECK(unitary_like > 0);
    CHECK(singular > 0);

    // the basis projector is producible but no unitary is proportional to it
    Mat rank1(d, d);
    rank1.at(0, 0) = 1.0;
    CHECK(in_set_up_to_scalar(rank1, maps, 1e-7));
    CHECK(!in_set_up_to_scalar(rank1, G, 1e-7));

    // the square root of the shift is not reachable
    Mat sqz(d, d);
    for (int k = 0; k < d; ++k)
      sqz.at(k, k) = std::exp(Cx(0.0, M_PI * k / d));
    Mat sqx = H * sqz * H.adjoint();
    CHECK(equal_tight(sqx * sqx, X, 1e-11));
    CHECK(!in_set_up_to_scalar(sqx, G, 1e-7));
    CHECK(!in_set_up_to_scalar(sqx, maps, 1e-7));

    CHECK_THROWS_AS(producible_single_qudit_maps(d, 0),
                    std::invalid_argument);
  }
}

TEST_CASE("cyclotomic integer detection") {
  CHECK(cyclotomic_integer(Cx(3.0, 0.0), 2, 1e-9));
  CHECK(cyclotomic_integer(Cx(-7.0, 0.0), 2, 1e-9));
  CHECK(cyclotomic_integer(Cx(0.0, 0.0), 2, 1e-9));
  CHECK(!cyclotomic_integer(Cx(0.5, 0.0), 2, 1e-9));
  CHECK(!cyclotomic_integer(Cx(0.0, 1.0), 2, 1e-9));

  Cx q = omega(3, 1);
  CHECK(cyclotomic_integer(Cx(1.0, 0.0) + q, 3, 1e-9));
  CHECK(cyclotomic_integer(Cx(2.0, 0.0) - q, 3, 1e-9));
  CHECK(cyclotomic_integer(q * q, 3, 1e-9));
  CHECK(cyclotomic_integer(std::exp(Cx(0.0, M_PI / 3.0)), 3, 1e-9));
  CHECK(!cyclotomic_integer(Cx(1.0 / 3.0, 0.0), 3, 1e-9));
  CHECK(!cyclotomic_integer(Cx(0.0, 0.5), 3, 1e-9));

  CHECK_THROWS_AS(cyclotomic_integer(Cx(1.0, 0.0), 4, 1e-9),
                  std::invalid_argument);
}
