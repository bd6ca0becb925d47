#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "onebit/errors.hpp"
#include "onebit/linear_rx.hpp"

using namespace onebit;

namespace {

CMatrix fixed_channel() {
  CMatrix h(3, 2);
  h << cd(0.3, 0.1), cd(-0.7, 0.4),
       cd(1.1, -0.5), cd(0.2, 0.9),
       cd(-0.4, -0.8), cd(0.6, -0.2);
  return h;
}

constexpr double kFixedN0 = 0.5;

// Combiners for fixed_channel() at N0 = 0.5 from an independent numpy
// implementation, row-major K x N.
const std::map<std::string, std::vector<cd>>& combiner_oracle() {
  static const std::map<std::string, std::vector<cd>> table = {
    {"MRC", {{0.3, -0.1}, {1.1, 0.5}, {-0.4, 0.8}, {-0.7, -0.4}, {0.2, -0.9}, {0.6, 0.2}}},
    {"ZF", {{-0.5783410138248857, 1.0437788018433187}, {0.610599078341014, 0.1728110599078344}, {-0.11981566820276525, 0.5898617511520742}, {-1.525345622119817, -0.5069124423963143}, {0.09216589861751132, 0.16129032258064585}, {-0.2857142857142863, 0.1382488479262671}}},
    {"MMSE", {{-0.10837438423645329, 0.2635467980295568}, {0.33251231527093605, 0.12315270935960589}, {-0.0935960591133005, 0.28078817733990147}, {-0.5153940886699508, -0.19704433497536952}, {0.05541871921182265, -0.09544334975369448}, {0.01600985221674869, 0.06773399014778322}}},
    {"AQNM_MMSE", {{0.006013502506057016, 0.08315438421379336}, {0.18689315346094906, 0.07522258067379657}, {-0.08511171006132827, 0.20733823893627001}, {-0.2996692671111668, -0.1347429161853186}, {0.032753642552808146, -0.09388270154114513}, {0.07386009870114535, 0.049363245442790776}}},
    {"WFQ", {{0.009446281033705622, 0.13062265820577026}, {0.2935801970797188, 0.1181630233644306}, {-0.1336973139511911, 0.325696259717672}, {-0.47073400425882306, -0.2116602516263251}, {0.05145089939178153, -0.1474751830680884}, {0.11602277521386323, 0.07754201294814762}}},
    {"BMRC", {{0.21409489393833256, -0.07136496464611085}, {0.5235758261728558, 0.23798901189675262}, {-0.2447798093110635, 0.489559618622127}, {-0.4995547525227759, -0.2854598585844434}, {0.09519560475870105, -0.4283802214141547}, {0.3671697139665952, 0.12238990465553175}}},
    {"BZF", {{-0.7903444822675849, 1.452976655373406}, {1.0603991332593532, 0.2848112998283846}, {-0.2835700718193409, 1.1857734655144192}, {-2.133853444073765, -0.7095468989203465}, {0.17286367834620278, 0.30664913153435397}, {-0.5002705302336166, 0.24566537117261933}}},
    {"BMMSE", {{0.011949746516742002, 0.12037585738199727}, {0.38361015135357757, 0.15035996732506815}, {-0.13134208759740176, 0.3201010550327809}, {-0.4211883750223521, -0.19316693463998813}, {0.06142155938066696, -0.18927061995114233}, {0.10523377556912927, 0.07713167602070824}}},
  };
  return table;
}

// Rescaled soft estimates for y = [1+j, -1+j, 1-j] under each combiner.
const std::map<std::string, std::vector<cd>>& soft_oracle() {
  static const std::map<std::string, std::vector<cd>> table = {
    {"MRC", {{-0.42434136230148406, 1.06085340575371}, {0.7906149592353967, -0.2635383197451322}}},
    {"ZF", {{-0.8187741211424029, 0.6823117676186685}, {-0.6004343555044286, -0.709604238323416}}},
    {"MMSE", {{-0.7841135709056358, 0.9047464279680412}, {-0.26839151828713875, -0.7032537251321227}}},
    {"AQNM_MMSE", {{-0.4754502440525658, 1.0806524454228876}, {0.04543959686429601, -0.7772210758006367}}},
    {"WFQ", {{-0.4754502440525655, 1.080652445422888}, {0.04543959686429592, -0.7772210758006367}}},
    {"BMRC", {{-0.22866845879167833, 1.1493033578740668}, {0.6086985012818595, -0.5062594809684573}}},
    {"BZF", {{-0.7551773413819548, 0.8173707612239185}, {-0.6067736995290657, -0.6272462828262323}}},
    {"BMMSE", {{-0.6263697521551064, 1.1281170833732415}, {0.11884646340460098, -0.5664700326785359}}},
  };
  return table;
}

double max_abs(const CMatrix& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("received covariance") {
  CMatrix h(1, 1);
  h << cd(1, 0);
  CHECK(received_covariance(h, 1.0)(0, 0) == cd(2, 0));
  const CMatrix zero = CMatrix::Zero(3, 2);
  CHECK(max_abs(received_covariance(zero, 0.7) - 0.7 * CMatrix::Identity(3, 3)) == 0.0);
}

TEST_CASE("received covariance matches sample covariance") {
  const Constellation qpsk = make_constellation(Modulation::kQpsk);
  Rng rng(21);
  const CMatrix h = complex_gaussian(3, 2, 1.0, rng);
  const double n0 = 0.4;
  const CMatrix sigma = received_covariance(h, n0);
  const int draws = 100000;
  CMatrix acc = CMatrix::Zero(3, 3);
  Eigen::MatrixXd acc2 = Eigen::MatrixXd::Zero(3, 3);
  for (int i = 0; i < draws; ++i) {
    const CVector r = transmit(h, random_symbols(qpsk, 2, rng), n0, rng).r;
    const CMatrix outer = r * r.adjoint();
    acc += outer;
    acc2 += outer.real().cwiseAbs2();
  }
  const CMatrix mean = acc / draws;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double var = acc2(i, j) / draws - mean(i, j).real() * mean(i, j).real();
      const double se = std::sqrt(var / draws);
      CHECK(std::abs(mean(i, j).real() - sigma(i, j).real()) < 4 * se);
    }
  }
}

TEST_CASE("scalar Bussgang model") {
  CMatrix h(1, 1);
  h << cd(1, 0);
  const BussgangModel m = bussgang_model(h, 1.0);
  const double inv_sqrt_pi = std::sqrt(1.0 / std::numbers::pi);
  CHECK(m.gain(0) == doctest::Approx(inv_sqrt_pi));
  CHECK(m.effective_channel(0, 0).real() == doctest::Approx(inv_sqrt_pi));
  CHECK(m.noise_cov(0, 0).real() == doctest::Approx(1.0 - 1.0 / std::numbers::pi));
  CHECK(std::abs(m.noise_cov(0, 0).imag()) < 1e-15);
}

TEST_CASE("arcsine law has unit diagonal") {
  Rng rng(4);
  const CMatrix h = complex_gaussian(6, 3, 1.0, rng);
  const CMatrix a = arcsine_law(received_covariance(h, 0.2));
  for (int i = 0; i < 6; ++i) CHECK(a(i, i) == cd(1.0, 0.0));
  CHECK(max_abs(a - a.adjoint()) < 1e-15);
}

TEST_CASE("noise covariance against an independent implementation") {
  const BussgangModel m = bussgang_model(fixed_channel(), kFixedN0);
  const std::vector<cd> expect = {
      {0.6180281365794512, 0.0}, {0.002082120462527294, 0.016830581364155762}, {-0.013166667032260396, 0.0009428970889334706}, {0.002082120462527294, -0.016830581364155762}, {0.47665776719960395, 0.0}, {-1.0171978639398004e-05, 0.06560154479140812}, {-0.013166667032260396, -0.0009428970889334706}, {-1.0171978639398004e-05, -0.06560154479140812}, {0.5506213371522954, 0.0}};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      CHECK(std::abs(m.noise_cov(i, j) - expect[static_cast<std::size_t>(3 * i + j)]) < 1e-12);
    }
  }
}

TEST_CASE("combiners against an independent implementation") {
  const CMatrix h = fixed_channel();
  for (CombinerKind kind : kAllCombinerKinds) {
    const std::string name(to_string(kind));
    CAPTURE(name);
    const Combiner c = build_combiner(kind, h, kFixedN0);
    const auto& expect = combiner_oracle().at(name);
    REQUIRE(c.w.rows() == 2);
    REQUIRE(c.w.cols() == 3);
    for (int k = 0; k < 2; ++k) {
      for (int n = 0; n < 3; ++n) {
        CHECK(std::abs(c.w(k, n) - expect[static_cast<std::size_t>(3 * k + n)]) < 1e-12);
      }
    }
  }
}

TEST_CASE("linear detection against an independent implementation") {
  const Constellation qpsk = make_constellation(Modulation::kQpsk);
  CVector y(3);
  y << cd(1, 1), cd(-1, 1), cd(1, -1);
  for (CombinerKind kind : kAllCombinerKinds) {
    const std::string name(to_string(kind));
    CAPTURE(name);
    const LinearDetection d =
        detect_linear(build_combiner(kind, fixed_channel(), kFixedN0), y, qpsk);
    const auto& expect = soft_oracle().at(name);
    for (int k = 0; k < 2; ++k) {
      CHECK(std::abs(d.soft(k) - expect[static_cast<std::size_t>(k)]) < 1e-12);
      CHECK(d.symbols(k) == qpsk.slice(d.soft(k)));
    }
  }
}

TEST_CASE("combiner special cases") {
  const CMatrix eye = CMatrix::Identity(3, 3);
  CHECK(max_abs(build_combiner(CombinerKind::kMrc, eye, 0.1).w - eye) == 0.0);

  Rng rng(8);
  const CMatrix h = complex_gaussian(4, 4, 1.0, rng);
  const Combiner zf = build_combiner(CombinerKind::kZf, h, 0.1);
  CHECK(max_abs(zf.w * h - CMatrix::Identity(4, 4)) < 1e-10);

  CMatrix one(1, 1);
  one << cd(1, 0);
  const Combiner bmmse = build_combiner(CombinerKind::kBmmse, one, 1.0);
  CHECK(bmmse.w(0, 0).real() == doctest::Approx(0.564190).epsilon(1e-6));

  // rank-deficient channel
  CMatrix rank1(4, 2);
  rank1.col(0) = h.col(0);
  rank1.col(1) = h.col(0);
  CHECK_THROWS_AS(build_combiner(CombinerKind::kZf, rank1, 0.1), SingularMatrixError);
  CHECK_THROWS_AS(build_combiner(CombinerKind::kBzf, rank1, 0.1), SingularMatrixError);
}

TEST_CASE("noiseless identity channel recovers the symbol") {
  const Constellation qpsk = make_constellation(Modulation::kQpsk);
  CMatrix one(1, 1);
  one << cd(1, 0);
  Rng rng(1);
  CVector x(1);
  x << cd(1, 1) / std::sqrt(2.0);
  const TxRxSample s = transmit(one, x, 0.0, rng);
  const LinearDetection d = detect_linear(build_combiner(CombinerKind::kZf, one, 0.0), s.y, qpsk);
  CHECK(std::abs(d.symbols(0) - x(0)) < 1e-15);
}

TEST_CASE("rescaling to sqrt(K) norm") {
  CVector v(2);
  v << cd(1, 1), cd(1, -1);
  const CVector r = rescale_to_users(v);
  CHECK(std::abs(r(0) - cd(1, 1) / std::sqrt(2.0)) < 1e-15);
  CHECK(std::abs(r(1) - cd(1, -1) / std::sqrt(2.0)) < 1e-15);
  CHECK(rescale_to_users(CVector::Zero(2)) == CVector::Zero(2));
}

TEST_CASE("batched soft detection equals per-vector detection") {
  const Constellation qpsk = make_constellation(Modulation::kQpsk);
  Rng rng(12);
  const CMatrix h = complex_gaussian(8, 3, 1.0, rng);
  CMatrix y(8, 5);
  for (int b = 0; b < 5; ++b) y.col(b) = transmit(h, random_symbols(qpsk, 3, rng), 0.2, rng).y;
  for (CombinerKind kind : kAllCombinerKinds) {
    const Combiner c = build_combiner(kind, h, 0.2);
    const CMatrix batch = detect_linear_soft(c, y);
    for (int b = 0; b < 5; ++b) {
      CHECK(max_abs(batch.col(b) - detect_linear(c, y.col(b), qpsk).soft) < 1e-12);
    }
  }
}

TEST_CASE("AQNM-MMSE and WFQ decisions coincide") {
  const Constellation qpsk = make_constellation(Modulation::kQpsk);
  Rng rng(30);
  const double n0 = n0_from_snr_db(20.0);
  int same = 0;
  const int trials = 2000;
  for (int t = 0; t < trials; ++t) {
    const CMatrix h = complex_gaussian(16, 2, 1.0, rng);
    const CVector y = transmit(h, random_symbols(qpsk, 2, rng), n0, rng).y;
    const auto a = detect_linear(build_combiner(CombinerKind::kAqnmMmse, h, n0), y, qpsk);
    const auto w = detect_linear(build_combiner(CombinerKind::kWfq, h, n0), y, qpsk);
    same += a.symbols == w.symbols ? 1 : 0;
  }
  CHECK(same >= trials * 99 / 100);
}

TEST_CASE("combiner names round-trip") {
  for (CombinerKind kind : kAllCombinerKinds) {
    CHECK(parse_combiner_kind(to_string(kind)) == kind);
  }
  CHECK_FALSE(parse_combiner_kind("FOO").has_value());
  CHECK(is_bussgang(CombinerKind::kBzf));
  CHECK_FALSE(is_bussgang(CombinerKind::kZf));
}
