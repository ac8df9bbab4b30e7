#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "metastab.hpp"

using namespace metastab;

namespace {
std::string data(const std::string& name) { return std::string(METASTAB_DATA) + "/" + name; }
}  // namespace

TEST(Models, DefaultsReproduceReferenceSpin) {
  auto m = make_model({"spin_half", {}, {}});
  ASSERT_TRUE(std::holds_alternative<QuantumModel>(m));
  auto sd = spectral_decompose(build_liouvillian(std::get<QuantumModel>(m)));
  const auto& ev = sd.eigenvalues();
  ASSERT_EQ(ev.size(), 4u);
  EXPECT_NEAR(std::abs(ev[1] - cplx(-0.005, 0)), 0.0, 1e-12);
  EXPECT_NEAR(ev[2].real(), -0.5025, 1e-12);
  EXPECT_NEAR(std::abs(ev[2].imag()), 5.025, 1e-12);
}

TEST(Models, SpinWithoutKappaHasTwoStationaryModes) {
  auto m = std::get<QuantumModel>(make_model({"spin_half", {{"kappa", 0.0}}, {}}));
  EXPECT_EQ(spectral_decompose(build_liouvillian(m)).m_ss(), 2u);
  EXPECT_THROW(make_model({"spin_half", {{"kappa", 0.0}, {"gamma", 0.0}}, {}}), InvalidInput);
  EXPECT_THROW(make_model({"spin_half", {{"gamma", -1.0}}, {}}), InvalidInput);
}

TEST(Models, RandomModelIsNormalisedAndSeeded) {
  auto a = std::get<QuantumModel>(make_model({"random", {{"dim", 3}}, 4}));
  auto b = std::get<QuantumModel>(make_model({"random", {{"dim", 3}}, 4}));
  auto c = std::get<QuantumModel>(make_model({"random", {{"dim", 3}}, 5}));
  EXPECT_EQ(a.hamiltonian, b.hamiltonian);
  EXPECT_NE(a.hamiltonian, c.hamiltonian);
  EXPECT_EQ(a.jumps.size(), 2u);
  EXPECT_NEAR(induced_trace_norm(build_liouvillian(a)).value, 1.0, 1e-6);
}

TEST(Models, SpecifierErrors) {
  EXPECT_THROW(make_model({"nope", {}, {}}), InvalidInput);
  EXPECT_THROW(make_model({"spin_half", {{"delta", 1.0}}, {}}), InvalidInput);
  EXPECT_THROW(make_model({"random", {{"dim", 2.5}}, {}}), InvalidInput);
  EXPECT_THROW(make_model({"random", {{"dim", 1}}, {}}), InvalidInput);
  EXPECT_THROW(make_model({"qubit_decay", {{"rate", 0.0}}, {}}), InvalidInput);
}

TEST(Models, ClassicalSpecifiers) {
  auto dw = std::get<ClassicalGenerator>(make_model({"double_well", {}, {}}));
  EXPECT_DOUBLE_EQ(dw.q(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(dw.q(2, 1), 1e-3);
  auto u = std::get<ClassicalGenerator>(make_model({"uniform_chain", {{"n", 4}}, {}}));
  EXPECT_EQ(u.dim(), 4);
  EXPECT_DOUBLE_EQ(u.q(0, 0), -3.0);
}

TEST(ModelIo, JsonFiles) {
  auto spin = load_model_file(data("spin_half.json"));
  ASSERT_TRUE(std::holds_alternative<QuantumModel>(spin));
  auto ref = std::get<QuantumModel>(make_model({"spin_half", {}, {}}));
  EXPECT_LT((build_liouvillian(std::get<QuantumModel>(spin)).matrix - build_liouvillian(ref).matrix).norm(), 1e-12);

  auto dw = load_model_file(data("double_well.json"));
  ASSERT_TRUE(std::holds_alternative<ClassicalGenerator>(dw));
  EXPECT_LT((std::get<ClassicalGenerator>(dw).q - three_state_double_well(1.0, 1e-3).q).norm(), 1e-15);

  auto rnd = load_model_file(data("random_d3.json"));
  ASSERT_TRUE(std::holds_alternative<QuantumModel>(rnd));
  EXPECT_EQ(std::get<QuantumModel>(rnd).hamiltonian.rows(), 3);
}

TEST(ModelIo, EdgeListMatchesJson) {
  auto a = std::get<ClassicalGenerator>(load_model_file(data("double_well.edges")));
  auto b = std::get<ClassicalGenerator>(load_model_file(data("double_well.json")));
  EXPECT_EQ(a.q, b.q);
  std::istringstream in("# comment\ndim 3\n0 1 2.5\n");
  auto g = parse_edge_list(in);
  EXPECT_EQ(g.dim(), 3);
  EXPECT_DOUBLE_EQ(g.q(1, 0), 2.5);
  EXPECT_DOUBLE_EQ(g.q(0, 0), -2.5);
}

TEST(ModelIo, DiagnosticsCarryLocation) {
  try {
    load_model_file(data("malformed.json"));
    FAIL() << "expected InvalidInput";
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("malformed.json"), std::string::npos);
  }
  std::istringstream bad("0 1 1.0\n1 x 2.0\n");
  try {
    parse_edge_list(bad);
    FAIL() << "expected InvalidInput";
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  std::istringstream neg("0 1 -1.0\n");
  EXPECT_THROW(parse_edge_list(neg), InvalidInput);
  EXPECT_THROW(model_from_json(json::parse(R"({"dim": 2, "hamiltonian": [[0, 0], [0]]})")), InvalidInput);
  EXPECT_THROW(load_model_file(data("does_not_exist.json")), InvalidInput);
}

TEST(ModelIo, HashAndCsvHeader) {
  AnyModel a = make_model({"spin_half", {}, {}});
  AnyModel b = make_model({"spin_half", {}, {}});
  AnyModel c = make_model({"spin_half", {{"omega", 5.0}}, {}});
  EXPECT_EQ(model_hash(a), model_hash(b));
  EXPECT_NE(model_hash(a), model_hash(c));
  EXPECT_EQ(model_hash(a).size(), 16u);
  std::ostringstream out;
  {
    CsvWriter w(out, model_hash(a), 7, {"t", "d_I"});
    w.row({format_double(0.5), format_double(0.25)});
  }
  std::istringstream lines(out.str());
  std::string first, second, third;
  std::getline(lines, first);
  std::getline(lines, second);
  std::getline(lines, third);
  EXPECT_EQ(first, "# metastab " + std::string(kVersion) + " model=" + model_hash(a) + " seed=7");
  EXPECT_EQ(second, "t,d_I");
  EXPECT_EQ(third, "0.5,0.25");
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
}
