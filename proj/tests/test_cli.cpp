#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "beamlab/discretize.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("beamlab_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
  REQUIRE(out.good());
}

CliResult run_cli(const std::string& args) {
  const fs::path out_file = work_dir() / "stdout.txt";
  const fs::path err_file = work_dir() / "stderr.txt";
  const std::string cmd = std::string("\"") + BEAMLAB_CLI_PATH + "\" " + args +
                          " >" + out_file.string() + " 2>" + err_file.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

std::vector<std::pair<double, double>> read_csv_pairs(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::pair<double, double>> rows;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    REQUIRE(comma != std::string::npos);
    rows.emplace_back(std::stod(line.substr(0, comma)),
                      std::stod(line.substr(comma + 1)));
  }
  return rows;
}

}  // namespace

TEST_CASE("misspelled keys are fatal and named", "[cli]") {
  const fs::path cfg = work_dir() / "typo.ini";
  spit(cfg, "[model]\nlaw = elastic\n\n[tip]\ngamaa = 1.0\n");
  const CliResult r = run_cli("run " + cfg.string());
  CHECK(r.code == 1);
  CHECK(r.err.find("gamaa") != std::string::npos);
}

TEST_CASE("unknown sections are fatal", "[cli]") {
  const fs::path cfg = work_dir() / "badsec.ini";
  spit(cfg, "[model]\nlaw = elastic\n\n[spectre]\n");
  const CliResult r = run_cli("run " + cfg.string());
  CHECK(r.code == 1);
  CHECK(r.err.find("spectre") != std::string::npos);
}

TEST_CASE("law-inapplicable keys are fatal", "[cli]") {
  const fs::path cfg = work_dir() / "inapplicable.ini";
  spit(cfg, "[model]\nlaw = elastic\nkappa = 2.0\n");
  const CliResult r = run_cli("run " + cfg.string());
  CHECK(r.code == 1);
  CHECK(r.err.find("kappa") != std::string::npos);
}

TEST_CASE("missing config file exits with a config error", "[cli]") {
  const CliResult r = run_cli("run " + (work_dir() / "nope.ini").string());
  CHECK(r.code == 1);
}

TEST_CASE("bad invocations print usage", "[cli]") {
  CHECK(run_cli("").code == 1);
  CHECK(run_cli("frobnicate").code == 1);
  CHECK(run_cli("run").code == 1);
  CHECK(run_cli("run --badflag cfg.ini").code == 1);
  CHECK(run_cli("export-matrices cfg.ini --assert").code == 1);
  CHECK(run_cli("--version").code == 0);
}

TEST_CASE("minimal spectrum run emits conjugate-paired rows", "[cli]") {
  const fs::path cfg = work_dir() / "minimal.ini";
  const fs::path out = work_dir() / "minimal_out";
  spit(cfg,
       "[model]\nlaw = elastic\nboundary = free\n\n"
       "[discretization]\nn = 6\n\n[spectrum]\n");
  const CliResult r = run_cli("run " + cfg.string() + " --out " + out.string());
  REQUIRE(r.code == 0);

  const auto rows = read_csv_pairs(out / "spectrum.csv");
  CHECK(rows.size() == 24);  // 4 dofs per element after clamping
  int paired = 0;
  for (const auto& [re, im] : rows) {
    if (im <= 1e-9) continue;
    bool found = false;
    for (const auto& [re2, im2] : rows)
      if (std::abs(re2 - re) <= 1e-9 * (std::abs(re) + 1.0) &&
          std::abs(im2 + im) <= 1e-9 * (im + 1.0))
        found = true;
    if (found) ++paired;
  }
  CHECK(paired >= 10);

  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  CHECK(report["model"]["law"] == "elastic");
  CHECK(report["model"]["rho"] == 1.0);  // defaults echoed
  CHECK(report["model"]["tip"]["gamma"] == 1.0);
  CHECK(report["discretization"]["n"] == 6);
  CHECK(report["spectrum"]["n_eigenvalues"] == 24);
}

TEST_CASE("comparison verb reports matching boundary verdicts for the "
          "viscoelastic law", "[cli]") {
  const fs::path cfg = work_dir() / "compare.ini";
  const fs::path out = work_dir() / "compare_out";
  spit(cfg,
       "[model]\nlaw = kelvin_voigt\n\n"
       "[compare]\nlevels = 16,32,64\nexpect_match = true\n");
  const CliResult r = run_cli("run " + cfg.string() + " --assert --out " + out.string());
  REQUIRE(r.code == 0);
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  CHECK(report["compare"]["match"] == true);
  CHECK(report["compare"]["agreement"] == "match");
  CHECK(report["compare"]["free"]["verdict"] == "exponentially_stable");
  CHECK(report["compare"]["hybrid"]["verdict"] == "exponentially_stable");
  CHECK(report["assertions"]["failed"] == 0);
}

TEST_CASE("identical configs produce byte-identical outputs", "[cli]") {
  const fs::path cfg = work_dir() / "det.ini";
  spit(cfg,
       "[model]\nlaw = thermo_type_i\nboundary = hybrid\n\n"
       "[discretization]\nn = 8\n\n[spectrum]\n\n"
       "[simulate]\ndt = 0.02\nt_final = 1.0\ninitial = smooth_polynomial\n");
  const fs::path a = work_dir() / "det_a";
  const fs::path b = work_dir() / "det_b";
  REQUIRE(run_cli("run " + cfg.string() + " --out " + a.string()).code == 0);
  REQUIRE(run_cli("run " + cfg.string() + " --out " + b.string()).code == 0);
  for (const char* name : {"spectrum.csv", "energy.csv", "report.json"}) {
    INFO(name);
    const std::string ca = slurp(a / name), cb = slurp(b / name);
    REQUIRE_FALSE(ca.empty());
    CHECK(ca == cb);
  }
}

TEST_CASE("exported triplets reproduce the assembled pencil", "[cli]") {
  const fs::path cfg = work_dir() / "export.ini";
  const fs::path out = work_dir() / "export_out";
  spit(cfg,
       "[model]\nlaw = kelvin_voigt\nboundary = hybrid\n\n"
       "[discretization]\nn = 5\n");
  REQUIRE(run_cli("export-matrices " + cfg.string() + " --out " + out.string()).code == 0);

  beamlab::ModelSpec spec =
      beamlab::default_spec(beamlab::KelvinVoigt{}, beamlab::BoundaryKind::Hybrid);
  const beamlab::DiscreteSystem sys = beamlab::assemble(spec, 5);

  auto reparse = [&](const char* name) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(sys.layout.total, sys.layout.total);
    std::ifstream in(out / name);
    REQUIRE(in.good());
    int i = 0, j = 0;
    double v = 0.0;
    while (in >> i >> j >> v) m(i, j) = v;
    return m;
  };
  // 17 significant digits round-trip doubles exactly
  CHECK(reparse("E.txt") == sys.E);
  CHECK(reparse("S.txt") == sys.S);
  CHECK(reparse("H.txt") == sys.energy_form());
}

TEST_CASE("numerical preconditions exit with code 2", "[cli]") {
  const fs::path cfg = work_dir() / "narrow.ini";
  spit(cfg,
       "[model]\nlaw = kelvin_voigt\n\n[discretization]\nn = 8\n\n"
       "[resolvent]\nlambda_min = 1.0\nlambda_max = 5.0\n");
  const CliResult r = run_cli("run " + cfg.string());
  CHECK(r.code == 2);
  CHECK(r.err.find("decade") != std::string::npos);
}

TEST_CASE("failed expectations exit 3 only under --assert", "[cli]") {
  const fs::path cfg = work_dir() / "expect.ini";
  const fs::path out = work_dir() / "expect_out";
  spit(cfg,
       "[model]\nlaw = elastic\nboundary = hybrid\n\n"
       "[discretization]\nn = 8\n\n"
       "[spectrum]\nexpect_abscissa_below = -10.0\n");
  CHECK(run_cli("run " + cfg.string() + " --out " + out.string()).code == 0);
  const CliResult r = run_cli("run " + cfg.string() + " --assert --out " + out.string());
  CHECK(r.code == 3);
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  CHECK(report["assertions"]["failed"] == 1);
}

TEST_CASE("initial data can come from a file", "[cli]") {
  beamlab::ModelSpec spec =
      beamlab::default_spec(beamlab::Elastic{}, beamlab::BoundaryKind::Free);
  const int total = beamlab::make_layout(spec, 4).total;
  std::ostringstream data;
  for (int i = 0; i < total; ++i) data << "0.0\n";
  const fs::path vec = work_dir() / "x0.txt";
  spit(vec, data.str());

  const fs::path cfg = work_dir() / "fromfile.ini";
  const fs::path out = work_dir() / "fromfile_out";
  spit(cfg,
       "[model]\nlaw = elastic\nboundary = free\n\n[discretization]\nn = 4\n\n"
       "[simulate]\ndt = 0.1\nt_final = 0.5\ninitial = from_file\nfile = " +
           vec.string() + "\n");
  REQUIRE(run_cli("run " + cfg.string() + " --out " + out.string()).code == 0);
  const auto rows = read_csv_pairs(out / "energy.csv");  // first two columns
  REQUIRE(rows.size() == 6);
  for (const auto& [t, e] : rows) CHECK(e == 0.0);

  // wrong dimension is a numerical precondition failure
  spit(vec, "1.0\n2.0\n");
  CHECK(run_cli("run " + cfg.string() + " --out " + out.string()).code == 2);
}

TEST_CASE("shipped sample scenarios run clean under --assert", "[cli]") {
  for (const char* name :
       {"elastic_hybrid_spectrum.ini", "kelvin_voigt_compare.ini",
        "conservative_energy.ini", "nonsimple_decay.ini"}) {
    const fs::path cfg = fs::path(BEAMLAB_CONFIG_DIR) / name;
    REQUIRE(fs::exists(cfg));
    const fs::path out = work_dir() / (std::string("sample_") + name);
    const CliResult r = run_cli("run " + cfg.string() + " --assert --out " + out.string());
    INFO(name << ": " << r.err);
    CHECK(r.code == 0);
  }
}
