#include "aove/io.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "aove/error.hpp"
#include "aove/rng.hpp"

namespace aove {

namespace {

Matrix matrix_from_json(const Json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw DataError(what + ": expected a non-empty list of rows");
    const auto rows = static_cast<Index>(j.size());
    const auto cols = static_cast<Index>(j[0].size());
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) throw DataError(what + ": ragged rows");
        for (Index c = 0; c < cols; ++c) {
            const auto& v = row[static_cast<std::size_t>(c)];
            if (!v.is_number()) throw DataError(what + ": entries must be numbers");
            m(r, c) = v.get<double>();
        }
    }
    return m;
}

Vector vector_from_json(const Json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw DataError(what + ": expected a non-empty list");
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw DataError(what + ": entries must be numbers");
        v(static_cast<Index>(i)) = j[i].get<double>();
    }
    return v;
}

Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

Json vector_to_json(const Vector& v) {
    Json out = Json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

const Json& require(const Json& doc, const char* key) {
    if (!doc.is_object() || !doc.contains(key)) throw DataError(std::string("missing key '") + key + "'");
    return doc.at(key);
}

// Typed reads that record problems instead of throwing on the first one.
class Reader {
public:
    Reader(const Json& section, std::string prefix, std::vector<std::string>& problems)
        : section_(section), prefix_(std::move(prefix)), problems_(problems) {
        if (!section_.is_object()) problems_.push_back(prefix_ + " must be an object");
    }

    template <typename T>
    void get(const char* key, T& target) {
        seen_.insert(key);
        if (!section_.is_object() || !section_.contains(key)) return;
        try {
            target = section_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            problems_.push_back(prefix_ + "." + key + " has the wrong type");
        }
    }

    void note(const char* key) { seen_.insert(key); }

    void reject_unknown() {
        if (!section_.is_object()) return;
        for (const auto& [k, v] : section_.items())
            if (!seen_.count(k)) problems_.push_back("unknown key " + prefix_ + "." + k);
    }

private:
    const Json& section_;
    std::string prefix_;
    std::vector<std::string>& problems_;
    std::set<std::string> seen_;
};

void read_mle(const Json& section, const std::string& prefix, MleConfig& mle, std::vector<std::string>& problems) {
    if (!section.contains("mle")) return;
    Reader r(section.at("mle"), prefix + ".mle", problems);
    r.get("restarts", mle.restarts);
    r.get("tolerance", mle.tolerance);
    r.get("max_iterations", mle.max_iterations);
    r.get("restart_scale", mle.restart_scale);
    r.reject_unknown();
}

Json mle_to_json(const MleConfig& m) {
    return {{"restarts", m.restarts}, {"tolerance", m.tolerance}, {"max_iterations", m.max_iterations},
            {"restart_scale", m.restart_scale}};
}

void check_schema_version(const Json& doc, std::vector<std::string>& problems) {
    if (!doc.is_object()) {
        problems.push_back("config must be a JSON object");
        return;
    }
    if (!doc.contains("schema_version"))
        problems.push_back("missing schema_version");
    else if (!doc["schema_version"].is_number_integer() || doc["schema_version"].get<int>() != kSchemaVersion)
        problems.push_back("unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
}

}  // namespace

ParsedParams params_from_json(const Json& doc) {
    if (!doc.is_object()) throw DataError("parameter document must be an object");
    if (doc.value("family", std::string("general")) == "symcomm") {
        const double theta = require(doc, "theta").get<double>();
        SymCommParams sc(theta, matrix_from_json(require(doc, "basis"), "basis"),
                         vector_from_json(require(doc, "lambda_phi"), "lambda_phi"),
                         vector_from_json(require(doc, "lambda_sigma"), "lambda_sigma"));
        return {sc.expand(), sc};
    }
    const int p = require(doc, "p").get<int>();
    const int q = require(doc, "q").get<int>();
    if (p < 0 || q < 0) throw DataError("p and q must be nonnegative");
    std::vector<Matrix> phi, theta;
    const auto& jp = require(doc, "phi");
    const auto& jt = require(doc, "theta");
    if (!jp.is_array() || static_cast<int>(jp.size()) != p) throw DimensionError("phi must list exactly p matrices");
    if (!jt.is_array() || static_cast<int>(jt.size()) != q) throw DimensionError("theta must list exactly q matrices");
    for (const auto& m : jp) phi.push_back(matrix_from_json(m, "phi"));
    for (const auto& m : jt) theta.push_back(matrix_from_json(m, "theta"));
    return {VarmaParams(std::move(phi), std::move(theta), matrix_from_json(require(doc, "sigma_eps"), "sigma_eps")),
            std::nullopt};
}

Json params_to_json(const VarmaParams& params) {
    Json phi = Json::array(), theta = Json::array();
    for (const auto& m : params.phi()) phi.push_back(matrix_to_json(m));
    for (const auto& m : params.theta()) theta.push_back(matrix_to_json(m));
    return {{"p", params.p()}, {"q", params.q()}, {"phi", phi}, {"theta", theta},
            {"sigma_eps", matrix_to_json(params.sigma_eps())}};
}

Json params_to_json(const SymCommParams& params) {
    return {{"family", "symcomm"},
            {"theta", params.theta()},
            {"basis", matrix_to_json(params.basis())},
            {"lambda_phi", vector_to_json(params.lambda_phi())},
            {"lambda_sigma", vector_to_json(params.lambda_sigma())}};
}

DiscretePrior prior_from_json(const Json& doc) {
    const auto& atoms = require(doc, "atoms");
    if (!atoms.is_array() || atoms.empty()) throw DataError("prior needs a non-empty atoms list");
    DiscretePrior prior;
    for (const auto& a : atoms) {
        const double w = a.value("weight", 1.0);
        auto parsed = params_from_json(require(a, "params"));
        if (parsed.symcomm)
            prior.add(*parsed.symcomm, w);
        else
            prior.add(std::move(parsed.params), w);
    }
    prior.normalize();
    return prior;
}

Json prior_to_json(const DiscretePrior& prior) {
    Json atoms = Json::array();
    for (std::size_t i = 0; i < prior.size(); ++i) {
        const Json p = prior.symcomm(i) ? params_to_json(*prior.symcomm(i)) : params_to_json(prior.atom(i));
        atoms.push_back({{"weight", prior.weights()[i]}, {"params", p}});
    }
    return {{"atoms", atoms}};
}

PortfolioSpec spec_from_json(const Json& doc) {
    PortfolioSpec s;
    s.mu0 = require(doc, "mu0").get<double>();
    s.mu1 = require(doc, "mu1").get<double>();
    s.mu2 = require(doc, "mu2").get<double>();
    s.e = vector_from_json(require(doc, "e"), "e");
    s.x0 = vector_from_json(require(doc, "x0"), "x0");
    check_spec(s);
    return s;
}

Json spec_to_json(const PortfolioSpec& spec) {
    return {{"mu0", spec.mu0}, {"mu1", spec.mu1}, {"mu2", spec.mu2}, {"e", vector_to_json(spec.e)},
            {"x0", vector_to_json(spec.x0)}};
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    try {
        return Json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

SamplePath read_sample_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    Index cols = -1;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!header_seen) {
            header_seen = true;
            cols = static_cast<Index>(cells.size());
            continue;
        }
        if (static_cast<Index>(cells.size()) != cols)
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(cols) + " values");
        std::vector<double> row;
        for (const auto& c : cells) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(c, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || !std::isfinite(v))
                throw ParseError(path + ":" + std::to_string(line_no) + ": not a number: '" + c + "'");
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError(path + ": no observations");
    Matrix m(static_cast<Index>(rows.size()), cols);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (Index c = 0; c < cols; ++c) m(static_cast<Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    return SamplePath(std::move(m));
}

void write_sample_csv(std::ostream& out, const SamplePath& y) {
    for (Index j = 0; j < y.dim(); ++j) out << (j ? "," : "") << 'y' << (j + 1);
    out << '\n';
    char buf[40];
    for (Index t = 0; t < y.length(); ++t) {
        for (Index j = 0; j < y.dim(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", y.data()(t, j));
            out << (j ? "," : "") << buf;
        }
        out << '\n';
    }
}

std::vector<Method> methods_from_json(const Json& section, const std::vector<Method>& fallback) {
    if (!section.is_object() || !section.contains("methods")) return fallback;
    std::vector<Method> out;
    for (const auto& m : section.at("methods")) out.push_back(parse_method(m.get<std::string>()));
    return out;
}

SyntheticConfig synthetic_config_from_json(const Json& doc) {
    std::vector<std::string> problems;
    check_schema_version(doc, problems);
    SyntheticConfig c;
    const Json empty = Json::object();
    const Json& sec = doc.is_object() && doc.contains("synthetic") ? doc.at("synthetic") : empty;
    Reader r(sec, "synthetic", problems);
    std::int64_t n = c.n, T = c.T, window = c.window;
    r.get("n", n);
    c.n = n;
    c.n_ove = c.n <= 2 ? 500 : 1000;
    r.get("N_t", c.n_t);
    r.get("N_o", c.n_o);
    r.get("N_ove", c.n_ove);
    r.get("N_sove", c.n_sove);
    r.get("N_s", c.n_s);
    r.get("T", T);
    c.T = T;
    r.get("p", c.p);
    r.get("q", c.q);
    r.get("window", window);
    c.window = window;
    r.get("ensemble_size", c.ensemble_size);
    r.get("wealth", c.wealth);
    r.get("risk_aversion", c.risk_aversion);
    r.get("return_variance", c.return_variance);
    r.get("mu2", c.mu2);
    r.get("compute_mse", c.compute_mse);
    r.note("methods");
    r.note("mle");
    if (sec.is_object()) {
        read_mle(sec, "synthetic", c.mle, problems);
        try {
            methods_from_json(sec, {});
        } catch (const ConfigError& e) {
            problems.insert(problems.end(), e.problems().begin(), e.problems().end());
        } catch (const nlohmann::json::exception&) {
            problems.push_back("synthetic.methods must be a list of names");
        }
    }
    r.reject_unknown();
    if (doc.is_object()) {
        if (doc.contains("seed")) {
            if (doc["seed"].is_number_unsigned() || doc["seed"].is_number_integer())
                c.seed = doc["seed"].get<std::uint64_t>();
            else
                problems.push_back("seed must be an integer");
        }
        if (doc.contains("workers")) {
            if (doc["workers"].is_number_integer())
                c.workers = doc["workers"].get<int>();
            else
                problems.push_back("workers must be an integer");
        }
    }
    try {
        check_config(c);
    } catch (const ConfigError& e) {
        problems.insert(problems.end(), e.problems().begin(), e.problems().end());
    }
    if (!problems.empty()) throw ConfigError(std::move(problems));
    return c;
}

RealDataConfig real_config_from_json(const Json& doc) {
    std::vector<std::string> problems;
    check_schema_version(doc, problems);
    RealDataConfig c;
    const Json empty = Json::object();
    const Json& sec = doc.is_object() && doc.contains("real") ? doc.at("real") : empty;
    Reader r(sec, "real", problems);
    std::int64_t T = c.T, t_train = c.t_train, t_test = c.t_test, window = c.window;
    r.get("tickers", c.tickers);
    r.get("start_date", c.start_date);
    r.get("end_date", c.end_date);
    r.get("tau", c.tau);
    r.get("T", T);
    r.get("T_train", t_train);
    r.get("T_test", t_test);
    r.get("N_ove", c.n_ove);
    r.get("window", window);
    r.get("ensemble_size", c.ensemble_size);
    r.get("wealth", c.wealth);
    r.get("risk_aversion", c.risk_aversion);
    r.get("mu2", c.mu2);
    r.get("kde_folds", c.kde_folds);
    r.get("bandwidths", c.bandwidths);
    c.T = T;
    c.t_train = t_train;
    c.t_test = t_test;
    c.window = window;
    r.note("methods");
    r.note("mle");
    if (sec.is_object()) {
        read_mle(sec, "real", c.mle, problems);
        try {
            methods_from_json(sec, {});
        } catch (const ConfigError& e) {
            problems.insert(problems.end(), e.problems().begin(), e.problems().end());
        } catch (const nlohmann::json::exception&) {
            problems.push_back("real.methods must be a list of names");
        }
    }
    r.reject_unknown();
    if (doc.is_object()) {
        if (doc.contains("seed")) {
            if (doc["seed"].is_number_integer())
                c.seed = doc["seed"].get<std::uint64_t>();
            else
                problems.push_back("seed must be an integer");
        }
        if (doc.contains("workers")) {
            if (doc["workers"].is_number_integer())
                c.workers = doc["workers"].get<int>();
            else
                problems.push_back("workers must be an integer");
        }
    }
    try {
        check_config(c);
    } catch (const ConfigError& e) {
        problems.insert(problems.end(), e.problems().begin(), e.problems().end());
    }
    if (!problems.empty()) throw ConfigError(std::move(problems));
    return c;
}

Json synthetic_config_to_json(const SyntheticConfig& c) {
    return {{"schema_version", kSchemaVersion},
            {"seed", c.seed},
            {"synthetic",
             {{"n", c.n},
              {"N_t", c.n_t},
              {"N_o", c.n_o},
              {"N_ove", c.n_ove},
              {"N_sove", c.n_sove},
              {"N_s", c.n_s},
              {"T", c.T},
              {"p", c.p},
              {"q", c.q},
              {"window", c.window},
              {"ensemble_size", c.ensemble_size},
              {"wealth", c.wealth},
              {"risk_aversion", c.risk_aversion},
              {"return_variance", c.return_variance},
              {"mu2", c.mu2},
              {"compute_mse", c.compute_mse},
              {"mle", mle_to_json(c.mle)}}}};
}

Json real_config_to_json(const RealDataConfig& c) {
    return {{"schema_version", kSchemaVersion},
            {"seed", c.seed},
            {"real",
             {{"tickers", c.tickers},
              {"start_date", c.start_date},
              {"end_date", c.end_date},
              {"tau", c.tau},
              {"T", c.T},
              {"T_train", c.t_train},
              {"T_test", c.t_test},
              {"N_ove", c.n_ove},
              {"window", c.window},
              {"ensemble_size", c.ensemble_size},
              {"wealth", c.wealth},
              {"risk_aversion", c.risk_aversion},
              {"mu2", c.mu2},
              {"kde_folds", c.kde_folds},
              {"bandwidths", c.bandwidths},
              {"mle", mle_to_json(c.mle)}}}};
}

std::string config_digest(const Json& resolved) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(resolved.dump());
    return os.str();
}

std::string output_header(const std::string& digest, std::uint64_t seed) {
    std::ostringstream os;
    os << "# tool: aove " << kToolVersion << '\n' << "# config_digest: " << digest << '\n' << "# seed: " << seed << '\n';
    return os.str();
}

}  // namespace aove
