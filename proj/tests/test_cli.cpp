#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "aove/error.hpp"
#include "aove/io.hpp"
#include "aove/likelihood.hpp"
#include "bars.hpp"
#include "commands.hpp"
#include "oracles.hpp"

#ifndef AOVE_CLI_PATH
#define AOVE_CLI_PATH "aove"
#endif

using namespace aove;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "aove");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("aove_cli_" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
    std::string write(const std::string& name, const std::string& text) const {
        std::ofstream(file(name)) << text;
        return file(name);
    }
    std::string write(const std::string& name, const Json& doc) const { return write(name, doc.dump()); }
};

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void check_header(const std::string& text, std::uint64_t seed) {
    std::istringstream in(text);
    std::string a, b, c;
    std::getline(in, a);
    std::getline(in, b);
    std::getline(in, c);
    CHECK(a == "# tool: aove 1.0.0");
    CHECK(b.rfind("# config_digest: ", 0) == 0);
    CHECK(b.size() == 17 + 16);
    CHECK(c == "# seed: " + std::to_string(seed));
}

double field(const std::string& out, const std::string& key) {
    std::istringstream in(out);
    std::string k;
    double v;
    while (in >> k >> v)
        if (k == key) return v;
    return std::nan("");
}

Json spec_doc(double mu2) {
    return {{"mu0", 1.5}, {"mu1", 0.8}, {"mu2", mu2}, {"e", {0.1, 0.05}}, {"x0", {0.3, 0.9}}};
}

}  // namespace

TEST_CASE("validate command") {
    TempDir dir;
    Rng rng(1);
    const auto good = dir.write("good.json", params_to_json(oracle::random_symcomm(rng, 2)));
    auto r = run_cli({"validate", "--params", good});
    CHECK(r.code == 0);
    CHECK(r.out == "valid\n");

    const VarmaParams bad({1.1 * Matrix::Identity(2, 2)}, {Matrix::Zero(2, 2)}, Matrix::Identity(2, 2));
    r = run_cli({"validate", "--params", dir.write("bad.json", params_to_json(bad))});
    CHECK(r.code == 1);
    CHECK(r.out.find("AR stationarity violated") != std::string::npos);

    r = run_cli({"validate", "--params", dir.write("broken.json", std::string("{\"p\": 1, \"phi\": ["))});
    CHECK(r.code == 2);
    r = run_cli({"validate", "--params", dir.write("shape.json", Json{{"p", 1}, {"q", 0}, {"phi", {{{1.0}}}}, {"sigma_eps", {{1, 0}, {0, 1}}}})});
    CHECK(r.code == 2);
    CHECK(run_cli({"validate"}).code == 2);
    CHECK(run_cli({"nonsense"}).code == 2);
}

TEST_CASE("simulate and loglik round trip") {
    TempDir dir;
    Rng rng(2);
    const std::vector<Json> docs{params_to_json(VarmaParams::white_noise(Matrix::Identity(2, 2), 1, 1)),
                                 params_to_json(oracle::random_common_basis(rng, 2, 2, 1)),
                                 params_to_json(oracle::random_symcomm(rng, 3))};
    int k = 0;
    for (const auto& doc : docs) {
        const auto pfile = dir.write("p" + std::to_string(k) + ".json", doc);
        const auto s1 = dir.file("a" + std::to_string(k) + ".csv");
        const auto s2 = dir.file("b" + std::to_string(k) + ".csv");
        CHECK(run_cli({"simulate", "--params", pfile, "-T", "30", "--seed", "9", "--out", s1}).code == 0);
        CHECK(run_cli({"simulate", "--params", pfile, "--length", "30", "--seed", "9", "--out", s2}).code == 0);
        CHECK(slurp(s1) == slurp(s2));
        check_header(slurp(s1), 9);

        const auto r = run_cli({"loglik", "--params", pfile, "--sample", s1});
        REQUIRE(r.code == 0);
        const auto parsed = params_from_json(doc);
        const auto ll = log_likelihood(read_sample_csv(s1), parsed.params);
        CHECK(std::abs(field(r.out, "total") - ll.total()) <= 1e-12 * std::abs(ll.total()));
        CHECK(std::abs(field(r.out, "log_g0") - ll.log_g0) <= 1e-12 * std::abs(ll.log_g0));
        ++k;
    }
    const auto pfile = dir.file("p0.json");
    CHECK(run_cli({"simulate", "--params", pfile, "-T", "0", "--out", dir.file("z.csv")}).code == 2);
    CHECK(run_cli({"simulate", "--params", dir.file("missing.json"), "-T", "5"}).code == 2);
    const VarmaParams bad({1.1 * Matrix::Identity(2, 2)}, {}, Matrix::Identity(2, 2));
    CHECK(run_cli({"simulate", "--params", dir.write("bad.json", params_to_json(bad)), "-T", "5", "--out-dir", dir.file("x")}).code == 1);
    CHECK(run_cli({"loglik", "--params", dir.file("p2.json"), "--sample", dir.file("a0.csv")}).code == 2);
}

TEST_CASE("solve command") {
    TempDir dir;
    Rng rng(3);
    const auto atom = oracle::random_symcomm(rng, 2);
    const auto pfile = dir.write("atom.json", params_to_json(atom));
    const auto prior = dir.write("prior.json", Json{{"atoms", {{{"weight", 1.0}, {"params", params_to_json(atom)}}}}});
    REQUIRE(run_cli({"simulate", "--params", pfile, "-T", "25", "--out", dir.file("y.csv")}).code == 0);
    const auto y = dir.file("y.csv");

    SUBCASE("mu2 = 0 gives mu0 e for every method") {
        const auto spec = dir.write("spec0.json", spec_doc(0.0));
        for (const std::string m : {"pto", "fptp", "eto", "aove"}) {
            const auto out = dir.file(m + ".csv");
            std::vector<std::string> args{"solve", "--method", m, "--sample", y, "--spec", spec, "--out", out};
            if (m == "aove") args.insert(args.end(), {"--prior", prior});
            const auto r = run_cli(args);
            CHECK(r.code <= 1);
            std::istringstream in(slurp(out));
            std::string line;
            for (int i = 0; i < 4; ++i) std::getline(in, line);
            for (double target : {0.15, 0.075}) {
                std::getline(in, line);
                const auto c1 = line.find(','), c2 = line.rfind(',');
                CHECK(std::stod(line.substr(c1 + 1, c2 - c1 - 1)) == doctest::Approx(target).epsilon(1e-14));
                CHECK(line.substr(c2 + 1) == "0");
            }
        }
    }
    SUBCASE("single-atom A-OVE and ETO at the atom write identical files") {
        const auto spec = dir.write("spec.json", spec_doc(0.3));
        CHECK(run_cli({"solve", "--method", "aove", "--sample", y, "--spec", spec, "--prior", prior, "--out", dir.file("a.csv")}).code == 0);
        CHECK(run_cli({"solve", "--method", "eto", "--sample", y, "--spec", spec, "--params", pfile, "--out", dir.file("e.csv")}).code == 0);
        CHECK(slurp(dir.file("a.csv")) == slurp(dir.file("e.csv")));
        check_header(slurp(dir.file("a.csv")), 1);
    }
    SUBCASE("reproducible") {
        const auto spec = dir.write("spec.json", spec_doc(0.3));
        for (const std::string m : {"fptp", "eto"}) {
            run_cli({"solve", "--method", m, "--sample", y, "--spec", spec, "--seed", "4", "--out", dir.file("r1.csv")});
            run_cli({"solve", "--method", m, "--sample", y, "--spec", spec, "--seed", "4", "--out", dir.file("r2.csv")});
            CHECK(slurp(dir.file("r1.csv")) == slurp(dir.file("r2.csv")));
        }
    }
    SUBCASE("mismatched invocations") {
        const auto spec = dir.write("spec.json", spec_doc(0.3));
        CHECK(run_cli({"solve", "--method", "aove", "--sample", y, "--spec", spec}).code == 2);
        CHECK(run_cli({"solve", "--method", "lstm", "--sample", y, "--spec", spec}).code == 2);
        const auto spec3 = dir.write("spec3.json", Json{{"mu0", 1.0}, {"mu1", 1.0}, {"mu2", 0.1}, {"e", {0, 0, 0}}, {"x0", {0, 0, 0}}});
        CHECK(run_cli({"solve", "--method", "pto", "--sample", y, "--spec", spec3}).code == 2);
    }
}

TEST_CASE("config loading") {
    const auto c = synthetic_config_from_json(Json{{"schema_version", 1}});
    CHECK(c.n == 2);
    CHECK(c.n_t == 10000);
    CHECK(c.n_o == 50);
    CHECK(c.n_ove == 500);
    CHECK(c.n_s == 200);
    CHECK(c.T == 25);
    CHECK(c.n_sove == 5);
    CHECK(synthetic_config_from_json(Json{{"schema_version", 1}, {"synthetic", {{"n", 5}}}}).n_ove == 1000);

    const auto rc = real_config_from_json(Json{{"schema_version", 1}, {"real", {{"tickers", {"A", "B"}}}}});
    CHECK(rc.tau == 10);
    CHECK(rc.T == 10);
    CHECK(rc.n_ove == 200);

    try {
        synthetic_config_from_json(Json{{"schema_version", 2}, {"synthetic", {{"N_s", 0}, {"colour", "red"}, {"T", 3}}}});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.problems().size() >= 4);
    }
}

TEST_CASE("eval-synthetic") {
    TempDir dir;
    const Json cfg{{"schema_version", 1},
                   {"seed", 3},
                   {"synthetic", {{"N_t", 100}, {"N_o", 2}, {"N_ove", 50}, {"N_s", 5}, {"mle", {{"restarts", 2}}}}}};
    const auto cfile = dir.write("cfg.json", cfg);
    const auto t0 = std::chrono::steady_clock::now();
    auto r = run_cli({"eval-synthetic", "--config", cfile, "--out-dir", dir.file("a")});
    CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 30.0);
    REQUIRE(r.code == 0);
    for (const char* f : {"synthetic_records.csv", "synthetic_summary.csv"}) check_header(slurp(dir.file("a/") + f), 3);
    const auto resolved = read_json_file(dir.file("a/synthetic_config.json"));
    CHECK(resolved["synthetic"]["N_o"] == 2);

    r = run_cli({"eval-synthetic", "--config", cfile, "--out-dir", dir.file("b"), "--seed", "4", "--workers", "2"});
    REQUIRE(r.code == 0);
    const auto a = slurp(dir.file("a/synthetic_records.csv"));
    const auto b = slurp(dir.file("b/synthetic_records.csv"));
    CHECK(a != b);
    auto columns = [](const std::string& text) {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line))
            if (line[0] != '#') return line;
        return std::string();
    };
    CHECK(columns(a) == columns(b));

    r = run_cli({"eval-synthetic", "--config", dir.write("bad.json", Json{{"schema_version", 1}, {"synthetic", {{"N_o", 0}, {"T", 2}}}})});
    CHECK(r.code == 2);
    CHECK(r.err.find("N_o") != std::string::npos);
    CHECK(r.err.find("T must exceed") != std::string::npos);
}

TEST_CASE("eval-real") {
    TempDir dir;
    const VarmaParams daily({0.9 * Matrix::Identity(2, 2)}, {0.2 * Matrix::Identity(2, 2)}, 0.05 * Matrix::Identity(2, 2));
    const auto g = bars::generate(daily, {"AAA", "BBB"}, 400, 5);
    const auto bar_file = dir.write("bars.csv", g.csv);
    const Json cfg{{"schema_version", 1},
                   {"seed", 2},
                   {"real",
                    {{"tickers", {"AAA", "BBB"}}, {"T_train", 15}, {"T_test", 20}, {"N_ove", 30}, {"window", 5},
                     {"ensemble_size", 5}, {"mle", {{"restarts", 1}}}}}};
    const auto r = run_cli({"eval-real", "--config", dir.write("cfg.json", cfg), "--bars", bar_file, "--out-dir", dir.path.string()});
    INFO(r.err);
    REQUIRE(r.code == 0);
    for (const char* f : {"real_records.csv", "real_summary.csv", "real_trace.csv"}) check_header(slurp(dir.file(f)), 2);
    CHECK(slurp(dir.file("real_trace.csv")).find("step,method,shift,cost") != std::string::npos);

    Json missing = cfg;
    missing["real"]["tickers"] = {"AAA", "ZZZ"};
    CHECK(run_cli({"eval-real", "--config", dir.write("m.json", missing), "--bars", bar_file}).code == 2);
}

TEST_CASE("installed binary exit codes") {
    const std::string bin = AOVE_CLI_PATH;
    CHECK(WEXITSTATUS(std::system((bin + " > /dev/null 2>&1").c_str())) == 2);
    CHECK(WEXITSTATUS(std::system((bin + " --help > /dev/null 2>&1").c_str())) == 0);
}
