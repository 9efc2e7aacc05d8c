#include "jetq/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "jetq/bidisc.hpp"
#include "jetq/equivalence.hpp"
#include "jetq/grid.hpp"
#include "jetq/homogeneous.hpp"
#include "jetq/report.hpp"

namespace jetq {

namespace {

struct RunConfig {
    std::string command;
    std::vector<std::string> kernels;
    std::string params;
    int order = 2;
    double tol = kDefaultTol;
    int samples = 9;
    double radius = 0.6;
    std::string out;
    std::string format;  // empty: the command's default
    bool no_timing = false;
    std::uint64_t seed = kDefaultSeed;

    // bidisc / homog
    double lambda = 1.0, mu = 1.0;
    int pmax = 10;
    double alpha = 1.0, delta = 1.0, beta = 0.0;
    // kernel parse
    std::string expr;
    int dim = 1;
};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string csv() const {
        std::string s;
        auto line = [&](const std::vector<std::string>& r) {
            for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + r[i];
            s += "\n";
        };
        line(header);
        for (const auto& r : rows) line(r);
        return s;
    }
};

struct Outcome {
    Json results = Json::object();
    Table table;
    std::string csv_override;  // preformatted CSV (shift table)
    int exit = kExitOk;
};

std::string num(double v) { return format_number(v); }

void validate(const RunConfig& c) {
    if (!(c.tol > 0.0)) throw DomainError("--tol must be > 0");
    if (c.order < 1) throw DomainError("--order must be >= 1");
    if (c.samples < 1) throw DomainError("--samples must be >= 1");
    if (!(c.radius >= 0.0 && c.radius < 1.0)) throw DomainError("--radius must lie in [0, 1)");
    if (!c.format.empty() && c.format != "json" && c.format != "csv")
        throw DomainError("--format must be json or csv");
}

KernelSpec load(const std::string& path, const ParameterBinding& overrides) {
    KernelSpec s = load_kernel_spec(path);
    s.params = s.params.merged(overrides);
    return s;
}

std::vector<CVector> tangential_grid(int m, const RunConfig& c) {
    if (m <= 1) return {CVector(0)};
    return sample_grid(m - 1, c.samples, c.radius, c.seed);
}

void coordinate_columns(Table& t, int n, const char* prefix) {
    for (int j = 0; j < n; ++j) {
        t.header.push_back(std::string(prefix) + std::to_string(j + 2) + "_re");
        t.header.push_back(std::string(prefix) + std::to_string(j + 2) + "_im");
    }
}

void coordinate_values(std::vector<std::string>& row, const CVector& z) {
    for (Eigen::Index j = 0; j < z.size(); ++j) {
        row.push_back(num(z[j].real()));
        row.push_back(num(z[j].imag()));
    }
}

Json residual_json(const BlockResiduals& r) {
    return Json{{"tan", r.tan}, {"row", r.row}, {"col", r.col}, {"scalar", r.scalar}};
}

Outcome cmd_invariants(const RunConfig& c, Json& config) {
    if (c.kernels.size() != 1) throw DomainError("invariants needs exactly one --kernel");
    const KernelSpec spec = load(c.kernels[0], parse_parameter_list(c.params));
    config["kernel"] = serialize(spec.kernel);
    config["dimension"] = spec.dimension;
    const int m = spec.dimension;
    Outcome o;
    o.table.header = {"index"};
    coordinate_columns(o.table, m - 1, "z");
    o.table.header.push_back("trans");
    for (int j = 2; j <= m; ++j) {
        o.table.header.push_back("angle" + std::to_string(j) + "_re");
        o.table.header.push_back("angle" + std::to_string(j) + "_im");
    }
    Json points = Json::array();
    const auto grid = tangential_grid(m, c);
    for (std::size_t n = 0; n < grid.size(); ++n) {
        CVector z(m);
        z[0] = 0.0;
        z.tail(m - 1) = grid[n];
        const CMatrix K = curvature_matrix(spec.kernel, z, spec.params);
        const CurvatureSplit s = curvature_split(K);
        Json p;
        p["z"] = to_json(z);
        p["curvature"] = to_json(K);
        p["trans"] = s.trans;
        p["tan"] = to_json(s.tan);
        p["angle"] = to_json(s.angle);
        p["second_fundamental_form"] = to_json(second_fundamental_form(spec.kernel, z, spec.params));
        p["jet_metric"] = to_json(jet_kernel(spec.kernel, c.order, EvalPoint::diagonal(z), spec.params).value);
        points.push_back(std::move(p));

        std::vector<std::string> row{std::to_string(n)};
        coordinate_values(row, grid[n]);
        row.push_back(num(s.trans));
        coordinate_values(row, s.angle);
        o.table.rows.push_back(std::move(row));
    }
    o.results["points"] = std::move(points);
    return o;
}

Outcome cmd_equiv(const RunConfig& c, Json& config) {
    if (c.kernels.size() != 2) throw DomainError("equiv needs exactly two --kernel files");
    const ParameterBinding overrides = parse_parameter_list(c.params);
    const KernelSpec a = load(c.kernels[0], overrides), b = load(c.kernels[1], overrides);
    if (a.dimension != b.dimension)
        throw DomainError("dimension mismatch: " + std::to_string(a.dimension) + " vs " + std::to_string(b.dimension));
    config["kernels"] = Json::array({serialize(a.kernel), serialize(b.kernel)});
    config["dimension"] = a.dimension;
    // Each file's parameters belong to its own kernel, even when the names coincide.
    const KernelExpr ka = bind_parameters(a.kernel, a.params), kb = bind_parameters(b.kernel, b.params);

    const auto grid = tangential_grid(a.dimension, c);
    const EquivalenceReport r = order_k_equivalent(ka, kb, c.order, grid, c.tol, {});
    Outcome o;
    o.results["equivalent"] = r.equivalent;
    o.results["max_residual"] = r.max_residual;
    o.results["residuals"] = residual_json(r.residuals);
    Json per = Json::array();
    o.table.header = {"index"};
    coordinate_columns(o.table, a.dimension - 1, "z");
    for (const char* h : {"tan", "row", "col", "scalar"}) o.table.header.push_back(h);
    for (std::size_t n = 0; n < grid.size(); ++n) {
        per.push_back(Json{{"z", to_json(grid[n])}, {"residuals", residual_json(r.per_sample[n])}});
        std::vector<std::string> row{std::to_string(n)};
        coordinate_values(row, grid[n]);
        const auto& s = r.per_sample[n];
        for (double v : {s.tan, s.row, s.col, s.scalar}) row.push_back(num(v));
        o.table.rows.push_back(std::move(row));
    }
    o.results["samples"] = std::move(per);
    o.exit = r.equivalent ? kExitOk : kExitNotEquivalent;
    return o;
}

Outcome cmd_bidisc_table(const RunConfig& c, Json& config) {
    const ModuleParams m{c.lambda, c.mu};
    m.validate();
    config["lambda"] = c.lambda;
    config["mu"] = c.mu;
    config["pmax"] = c.pmax;
    if (c.pmax < 0) throw DomainError("--pmax must be >= 0");
    Outcome o;
    o.csv_override = shift_table_csv(m, c.pmax);
    Json rows = Json::array();
    for (int p = 0; p <= c.pmax; ++p) {
        const ShiftBlock b = shift_blocks(m, p);
        rows.push_back(Json{{"p", p},
                            {"alpha_p", b.m1(0, 0).real()},
                            {"beta_p1", b.m1(1, 0).real()},
                            {"eta_p", b.m1(1, 1).real()},
                            {"beta_p2", b.m2(1, 0).real()}});
    }
    o.results["blocks"] = std::move(rows);
    return o;
}

Outcome cmd_bidisc_verify(const RunConfig& c, Json& config) {
    const ModuleParams m{c.lambda, c.mu};
    m.validate();
    if (c.pmax < 0) throw DomainError("--pmax must be >= 0");
    config["lambda"] = c.lambda;
    config["mu"] = c.mu;
    config["pmax"] = c.pmax;

    double gram_identity_err = 0.0, gram_oracle_err = 0.0, block_err = 0.0, nilpotent = 0.0;
    const BruteForceQuotient q = brute_force_quotient(m, c.pmax);
    auto rel = [](double x, double y) { return std::abs(x - y) / std::max(1.0, std::abs(y)); };
    for (int p = 0; p <= c.pmax; ++p) {
        gram_identity_err = std::max(gram_identity_err, gram_identity(m, p).relative_error());
        const GramData a = q.degrees[p].gram, b = gram_data(m, p);
        gram_oracle_err = std::max({gram_oracle_err, rel(a.norm_g1_sq, b.norm_g1_sq), rel(a.inner_g1_g2, b.inner_g1_g2),
                                    rel(a.norm_g2_sq, b.norm_g2_sq), rel(a.norm_f2_sq, b.norm_f2_sq)});
        const ShiftBlock closed = shift_blocks(m, p);
        block_err = std::max({block_err, (closed.m1 - q.blocks[p].m1).cwiseAbs().maxCoeff(),
                              (closed.m2 - q.blocks[p].m2).cwiseAbs().maxCoeff()});
        const CMatrix Q1 = 0.5 * (closed.m1 - closed.m2);
        nilpotent = std::max(nilpotent, (Q1 * Q1).cwiseAbs().maxCoeff());
    }

    double jets_err = 0.0, series_err = 0.0;
    Json kq = Json::array();
    for (const CVector& z : sample_grid(1, c.samples, c.radius, c.seed)) {
        const CMatrix closed = quotient_kernel_restricted(m, z[0]);
        const double scale = closed.cwiseAbs().maxCoeff();
        const double j = (closed - quotient_kernel_from_jets(m, z[0])).cwiseAbs().maxCoeff() / scale;
        const double s = (closed - quotient_kernel_series(m, z[0], 300)).cwiseAbs().maxCoeff();
        jets_err = std::max(jets_err, j);
        series_err = std::max(series_err, s);
        kq.push_back(Json{{"z", to_json(z[0])}, {"closed_form", to_json(closed)}, {"jets", j}, {"series", s}});
    }
    CVector w(2);
    w << 0.4, 0.2;
    const TruncationCheck t = truncated_kernel_check(m, 80, w, w);

    Outcome o;
    Json checks = Json::array();
    bool ok = true;
    auto check = [&](const char* name, double v) {
        const bool pass = v <= c.tol;
        ok = ok && pass;
        checks.push_back(Json{{"name", name}, {"residual", v}, {"pass", pass}});
        o.table.rows.push_back({name, num(v), pass ? "true" : "false"});
    };
    o.table.header = {"check", "residual", "pass"};
    check("gram_identity", gram_identity_err);
    check("gram_oracle", gram_oracle_err);
    check("shift_blocks_oracle", block_err);
    check("q1_nilpotent", nilpotent);
    check("kq_jets", jets_err);
    check("kq_series", series_err);
    check("kernel_series", t.series_residual);
    check("adjoint_eigenvectors", t.eigen_residual);
    o.results["checks"] = std::move(checks);
    o.results["kq"] = std::move(kq);
    const auto norms = shift_norms(m, std::min(c.pmax, 25));
    o.results["exploratory"] = Json{{"shift_norm_1", norms[0]}, {"shift_norm_2", norms[1]}};
    o.results["pass"] = ok;
    o.exit = ok ? kExitOk : kExitError;
    return o;
}

Outcome cmd_homog(const RunConfig& c, Json& config) {
    const HomogBundleParams h{c.alpha, c.delta, c.beta};
    h.validate();
    config["alpha"] = c.alpha;
    config["delta"] = c.delta;
    config["beta"] = c.beta;
    const KernelExpr metric = homog_bundle_metric(h);
    config["kernel"] = serialize(metric);
    Outcome o;
    o.table.header = {"index", "u1_re", "u1_im", "curvature_residual", "relation_residual"};
    Json points = Json::array();
    double worst = 0.0;
    const auto grid = sample_grid(1, c.samples, c.radius, c.seed);
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const cplx u1 = grid[n][0];
        const CMatrix closed = homog_curvature_restriction(h, u1);
        const CMatrix symbolic = diagonal_curvature_u(metric, u1);
        const double cr = (closed - symbolic).cwiseAbs().maxCoeff();
        const HomogMetricCoeffs coeffs = solve_homog_metric_coeffs(h.a(), h.b(), h.c(), u1);
        const HomogRelations rel = homog_relations(h.a(), h.b(), h.c(), u1);
        worst = std::max({worst, cr, rel.residual});
        points.push_back(Json{{"u1", to_json(u1)},
                              {"closed_form", to_json(closed)},
                              {"symbolic", to_json(symbolic)},
                              {"curvature_residual", cr},
                              {"coefficients", Json{{"a00", coeffs.a00}, {"a10", to_json(coeffs.a10)}, {"a11", coeffs.a11}}},
                              {"relation_residual", rel.residual}});
        o.table.rows.push_back({std::to_string(n), num(u1.real()), num(u1.imag()), num(cr), num(rel.residual)});
    }
    o.results["abc"] = Json::array({h.a(), h.b(), h.c()});
    o.results["points"] = std::move(points);
    o.results["max_residual"] = worst;
    o.results["pass"] = worst <= c.tol;
    o.exit = worst <= c.tol ? kExitOk : kExitError;
    return o;
}

Outcome cmd_kernel_parse(const RunConfig& c, Json& config) {
    KernelSpec spec;
    if (!c.kernels.empty()) {
        if (c.kernels.size() != 1 || !c.expr.empty()) throw DomainError("kernel parse takes one --kernel or --expr");
        spec = load(c.kernels[0], parse_parameter_list(c.params));
    } else if (!c.expr.empty()) {
        if (c.dim < 1) throw DomainError("--dim must be >= 1");
        spec.dimension = c.dim;
        spec.kernel = parse_kernel(c.expr, c.dim);
        spec.params = parse_parameter_list(c.params);
    } else {
        throw DomainError("kernel parse needs --kernel FILE or --expr TEXT");
    }
    Outcome o;
    const std::string text = serialize(spec.kernel);
    config["dimension"] = spec.dimension;
    o.results["canonical"] = text;
    o.results["node_count"] = node_count(spec.kernel);
    Json names = Json::array();
    for (const auto& p : parameters_of(spec.kernel)) names.push_back(p);
    o.results["parameters"] = std::move(names);
    Json bound = Json::object();
    for (const auto& [k, v] : spec.params.values()) bound[k] = v;
    o.results["bindings"] = std::move(bound);
    o.table.header = {"dimension", "canonical"};
    o.table.rows.push_back({std::to_string(spec.dimension), "\"" + text + "\""});
    return o;
}

std::uint64_t seed_from_env() {
    const char* s = std::getenv("JETQ_SEED");
    if (!s || !*s) return kDefaultSeed;
    try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used, 0);
        if (used != std::string(s).size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DomainError(std::string("JETQ_SEED is not an integer: ") + s);
    }
}

void add_common(CLI::App* sub, RunConfig& c, bool kernels) {
    if (kernels) sub->add_option("--kernel", c.kernels, "Kernel spec file (repeatable)");
    sub->add_option("--params", c.params, "Parameter overrides k=v,...");
    sub->add_option("--order", c.order, "Jet order k");
    sub->add_option("--tol", c.tol, "Tolerance");
    sub->add_option("--samples", c.samples, "Number of sample points");
    sub->add_option("--radius", c.radius, "Sample radius");
    sub->add_option("--out", c.out, "Write the report to PATH");
    sub->add_option("--format", c.format, "json or csv");
    sub->add_flag("--no-timing", c.no_timing, "Omit wall time from the report");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig c;
    CLI::App app{"Jet-bundle invariants of reproducing kernels", "jetq"};
    app.require_subcommand(1);
    auto* inv = app.add_subcommand("invariants", "Curvature, split and second fundamental form on a grid");
    add_common(inv, c, true);
    auto* eq = app.add_subcommand("equiv", "Order-k equivalence of two kernels");
    add_common(eq, c, true);
    auto* bi = app.add_subcommand("bidisc", "Quotient module of the bi-disc");
    bi->require_subcommand(1);
    auto* table = bi->add_subcommand("table", "Shift-block table");
    auto* verify = bi->add_subcommand("verify", "Closed forms against the brute-force oracle");
    for (auto* s : {table, verify}) {
        add_common(s, c, false);
        s->add_option("--lambda", c.lambda, "lambda > 0");
        s->add_option("--mu", c.mu, "mu > 0");
        s->add_option("--pmax", c.pmax, "Largest degree");
    }
    auto* hom = app.add_subcommand("homog", "Homogeneous rank-2 bundle checks");
    add_common(hom, c, false);
    hom->add_option("--alpha", c.alpha);
    hom->add_option("--delta", c.delta);
    hom->add_option("--beta", c.beta);
    auto* kern = app.add_subcommand("kernel", "Kernel text utilities");
    kern->require_subcommand(1);
    auto* parse = kern->add_subcommand("parse", "Parse and print the canonical form");
    add_common(parse, c, true);
    parse->add_option("--expr", c.expr, "Kernel expression text");
    parse->add_option("--dim", c.dim, "Dimension for --expr");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }

    const auto start = std::chrono::steady_clock::now();
    try {
        c.seed = seed_from_env();
        validate(c);
        Outcome o;
        Json config = Json::object();
        std::string default_format = "json";
        if (inv->parsed()) {
            c.command = "invariants";
        } else if (eq->parsed()) {
            c.command = "equiv";
        } else if (table->parsed()) {
            c.command = "bidisc table";
            default_format = "csv";
        } else if (verify->parsed()) {
            c.command = "bidisc verify";
        } else if (hom->parsed()) {
            c.command = "homog";
        } else {
            c.command = "kernel parse";
        }
        const std::string format = c.format.empty() ? default_format : c.format;

        config["kernel_files"] = c.kernels;
        config["params"] = c.params;
        config["order"] = c.order;
        config["tol"] = c.tol;
        config["samples"] = c.samples;
        config["radius"] = c.radius;
        config["seed"] = c.seed;
        config["format"] = format;

        if (c.command == "invariants") o = cmd_invariants(c, config);
        else if (c.command == "equiv") o = cmd_equiv(c, config);
        else if (c.command == "bidisc table") o = cmd_bidisc_table(c, config);
        else if (c.command == "bidisc verify") o = cmd_bidisc_verify(c, config);
        else if (c.command == "homog") o = cmd_homog(c, config);
        else o = cmd_kernel_parse(c, config);

        std::string text;
        if (format == "csv") {
            text = o.csv_override.empty() ? o.table.csv() : o.csv_override;
        } else {
            Json report;
            report["schema"] = kReportSchema;
            report["command"] = c.command;
            report["engine_version"] = kEngineVersion;
            report["config"] = std::move(config);
            for (auto it = o.results.begin(); it != o.results.end(); ++it) report[it.key()] = it.value();
            if (!c.no_timing)
                report["wall_time_s"] =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            text = dump_report(report);
        }
        if (c.out.empty()) {
            out << text;
        } else {
            std::ofstream f(c.out, std::ios::binary);
            if (!f) throw DomainError("cannot open output file: " + c.out);
            f << text;
            if (!f) throw DomainError("failed writing output file: " + c.out);
        }
        if (o.exit == kExitError) err << "error: verification residuals exceed --tol\n";
        return o.exit;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

}  // namespace jetq
