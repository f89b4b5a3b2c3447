//
// Command-line front end: accelerate, verify-relations, krylov-compare, qr.
//
// Exit codes: 0 ok, 1 relation defect, 2 I/O or parse error, 3 dimension
// error, 4 wrong problem kind, 5 rank deficiency.
//

#ifndef WEXTRAP_CLI_HPP
#define WEXTRAP_CLI_HPP

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <wextrap.hpp>

namespace wextrap::cli
{

using json = io::json;

enum ExitCode : int
{
    ok = 0,
    relation_defect = 1,
    io_error = 2,
    dimension_error = 3,
    wrong_kind = 4,
    rank_error = 5
};

struct RunConfig
{
    // inputs
    std::string sequence;
    std::vector<std::string> linear; // T, d
    std::string x0 = "zero";
    std::string nonlinear;
    int dim = 0;
    int iters = -1;
    std::string history;
    std::string matrix;
    // method
    std::string weight = "identity";
    bool weight_given = false;
    int k_max = 4;
    std::string methods = "both";
    double tau_exist = 1e-12;
    double tau_rank = 1e-13;
    double tau_stag = 1e-10;
    double tau_plateau = 1e-6;
    double defect_threshold = 1e-9;
    double krylov_tolerance = 1e-8;
    // output
    std::string output;
    std::string csv;
    std::string output_dir;
    bool check = false;
    bool quiet = false;
};

namespace detail
{

inline std::string sci(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6e", v);
    return buf;
}

inline std::string opt_sci(const std::optional<double>& v) { return v ? sci(*v) : std::string("n/a"); }

inline std::string pad(std::string s, std::size_t width)
{
    if (s.size() < width)
    {
        s.append(width - s.size(), ' ');
    }
    return s;
}

inline std::string default_dir(const RunConfig& cfg)
{
    if (!cfg.output_dir.empty())
    {
        return cfg.output_dir;
    }
    if (const char* env = std::getenv("WEXTRAP_OUTPUT_DIR"); env != nullptr && *env != '\0')
    {
        return env;
    }
    return ".";
}

inline std::string in_dir(const RunConfig& cfg, const std::string& name)
{
    return (std::filesystem::path(default_dir(cfg)) / name).string();
}

inline void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
    {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out << text;
    if (!out)
    {
        throw IoError("write to '" + path + "' failed");
    }
}

inline MethodSet parse_methods(const std::string& m)
{
    if (m == "both")
    {
        return {true, true};
    }
    if (m == "mpe")
    {
        return {true, false};
    }
    if (m == "rre")
    {
        return {false, true};
    }
    throw ParseError("--methods", 1, 1, "expected mpe, rre or both, got '" + m + "'");
}

inline ExtrapolationOptions extrapolation_options(const RunConfig& cfg)
{
    ExtrapolationOptions o;
    o.existence_tolerance = cfg.tau_exist;
    o.qr.rank_tolerance = cfg.tau_rank;
    return o;
}

inline RelationOptions relation_options(const RunConfig& cfg)
{
    RelationOptions o;
    o.stagnation_tolerance = cfg.tau_stag;
    o.plateau_tolerance = cfg.tau_plateau;
    o.defect_threshold = cfg.defect_threshold;
    return o;
}

inline Vector load_x0(const RunConfig& cfg, Index n)
{
    if (cfg.x0 == "zero")
    {
        return Vector::Zero(n);
    }
    Vector x0 = io::read_vector(cfg.x0);
    wextrap::detail::require_dimension(n, x0.size(), "--x0");
    return x0;
}

inline std::optional<FixedPointProblem> load_problem(const RunConfig& cfg)
{
    if (!cfg.linear.empty())
    {
        const SparseMatrix t = io::read_sparse_matrix(cfg.linear.at(0));
        const Vector d = io::read_vector(cfg.linear.at(1));
        if (t.rows() != t.cols())
        {
            throw DimensionMismatch("T must be square, got " + std::to_string(t.rows()) + "x" +
                                    std::to_string(t.cols()));
        }
        wextrap::detail::require_dimension(t.rows(), d.size(), "d");
        return make_linear_problem(t, d, load_x0(cfg, t.rows()));
    }
    if (!cfg.nonlinear.empty())
    {
        if (cfg.dim < 1)
        {
            throw DimensionMismatch("--dim must be >= 1 for --nonlinear");
        }
        FixedPointProblem p;
        if (cfg.nonlinear == "cosine")
        {
            p = make_cosine_problem(cfg.dim);
        }
        else if (cfg.nonlinear == "quadratic")
        {
            p = make_quadratic_problem(cfg.dim);
        }
        else
        {
            throw ParseError("--nonlinear", 1, 1, "expected cosine or quadratic, got '" + cfg.nonlinear + "'");
        }
        p.x0 = load_x0(cfg, cfg.dim);
        return p;
    }
    return std::nullopt;
}

struct Inputs
{
    std::vector<Vector> x;
    std::optional<FixedPointProblem> problem;
};

inline Inputs load_inputs(const RunConfig& cfg)
{
    Inputs in;
    if (!cfg.sequence.empty())
    {
        in.x = io::read_sequence(cfg.sequence).vectors();
        return in;
    }
    in.problem = load_problem(cfg);
    if (!in.problem)
    {
        throw ParseError("<arguments>", 1, 1, "no input: give --sequence, --linear or --nonlinear");
    }
    const Index m = cfg.iters >= 0 ? cfg.iters : cfg.k_max + 1;
    in.x = iterate(*in.problem, m).vectors();
    return in;
}

inline void print_table(std::ostream& out, const RunHistory& h, const RelationOptions& ropts,
                        const WeightOperator& w)
{
    out << "status: " << to_string(h.status);
    if (h.k0)
    {
        out << " (k0 = " << *h.k0 << ")";
    }
    out << '\n';
    out << pad("k", 5) << pad("mpe_exists", 12) << "phi\n";
    const MethodResult* prev_rre = nullptr;
    for (const ExtrapolationRecord& rec : h.records)
    {
        std::string mpe = !h.methods.mpe ? "off" : rec.mpe ? sci(rec.mpe->phi) : "\xe2\x80\x94";
        std::string rre = "off";
        if (rec.rre)
        {
            const bool stagnated =
                prev_rre != nullptr && !rec.at_k0 &&
                w.norm(rec.rre->s - prev_rre->s) <= ropts.stagnation_tolerance * (1.0 + w.norm(rec.rre->s));
            rre = stagnated ? "(stagnated)" : sci(rec.rre->phi);
            prev_rre = &*rec.rre;
        }
        out << pad(std::to_string(rec.k), 5) << pad(rec.mpe_exists ? "yes" : "no", 12) << "MPE: " << mpe
            << "  RRE: " << rre << (rec.at_k0 ? "  [k0]" : "") << '\n';
    }
}

inline std::string weight_spec(const RunConfig& cfg) { return cfg.weight; }

inline int cmd_accelerate(const RunConfig& cfg, std::ostream& out)
{
    const Inputs in = load_inputs(cfg);
    const Index n = in.x.front().size();
    const WeightOperator w = io::parse_weight_spec(cfg.weight, n);
    const RunHistory h = run(in.x, w, cfg.k_max, parse_methods(cfg.methods), extrapolation_options(cfg));

    const std::string path = cfg.output.empty() ? in_dir(cfg, "history.json") : cfg.output;
    io::save_history(path, h, weight_spec(cfg));
    if (!cfg.csv.empty())
    {
        write_text(cfg.csv, io::history_csv(h));
    }
    if (!cfg.quiet)
    {
        print_table(out, h, relation_options(cfg), w);
        out << "history: " << path << '\n';
    }
    return ok;
}

inline void print_report(std::ostream& out, const RelationReport& rep)
{
    out << pad("k", 5) << pad("mpe", 5) << pad("stag", 6) << pad("master", 15) << pad("inv-square", 15)
        << pad("residual", 15) << pad("extrapolant", 15) << pad("ratio", 15) << pad("sum", 15) << "monotone\n";
    for (const RelationEntry& e : rep.entries)
    {
        out << pad(std::to_string(e.k), 5) << pad(e.mpe_exists ? "yes" : "no", 5)
            << pad(e.stagnation_detected ? "yes" : "no", 6) << pad(opt_sci(e.master_identity), 15)
            << pad(opt_sci(e.inverse_square), 15) << pad(opt_sci(e.residual_combination), 15)
            << pad(opt_sci(e.extrapolant_combination), 15) << pad(opt_sci(e.mpe_from_ratio), 15)
            << pad(opt_sci(e.inverse_square_sum), 15) << (e.monotone ? "yes" : "NO") << '\n';
    }
    if (rep.peak_plateau)
    {
        auto ranges = [](const std::vector<IndexRange>& rs) {
            std::string s;
            for (const IndexRange& r : rs)
            {
                s += (s.empty() ? "" : ", ") + std::string("[") + std::to_string(r.first) + "," +
                     std::to_string(r.last) + "]";
            }
            return s.empty() ? std::string("none") : s;
        };
        out << "peaks: " << ranges(rep.peak_plateau->peaks) << "  plateaus: " << ranges(rep.peak_plateau->plateaus)
            << "  overlaps: " << ranges(rep.peak_plateau->overlaps) << '\n';
    }
    for (const Offender& o : rep.failures)
    {
        out << "FAIL " << o.name << " at k=" << o.k << ": " << sci(o.value) << '\n';
    }
    if (rep.theorem_violation)
    {
        out << "FAIL stagnation/existence: " << *rep.theorem_violation << '\n';
    }
    if (const std::optional<Offender> worst = rep.worst())
    {
        out << "worst offender: " << worst->name << " at k=" << worst->k << " (" << sci(worst->value) << ")\n";
    }
    out << (rep.passed() ? "PASS" : "FAIL") << " (threshold " << sci(rep.threshold) << ")\n";
}

inline int cmd_verify(const RunConfig& cfg, std::ostream& out)
{
    RunHistory h;
    std::optional<WeightOperator> w;
    PhiSource source = PhiSource::recompute;
    if (!cfg.history.empty())
    {
        const json j = io::load_json(cfg.history);
        const std::string spec = cfg.weight_given ? cfg.weight : j.value("weight", std::string("identity"));
        const Index n = static_cast<Index>(j.at("x0").size());
        w = io::parse_weight_spec(spec, n);
        h = io::history_from_json(j, &*w).history;
        source = PhiSource::stored;
    }
    else
    {
        const Inputs in = load_inputs(cfg);
        w = io::parse_weight_spec(cfg.weight, in.x.front().size());
        h = run(in.x, *w, cfg.k_max, MethodSet{}, extrapolation_options(cfg));
    }
    const RelationReport rep = verify_relations(h, *w, relation_options(cfg), source);
    if (!cfg.output.empty())
    {
        io::save_json(cfg.output, io::to_json(rep));
    }
    print_report(out, rep);
    return rep.passed() ? ok : relation_defect;
}

inline int cmd_krylov(const RunConfig& cfg, std::ostream& out)
{
    if (!cfg.sequence.empty())
    {
        throw WrongProblemKind("krylov-compare needs a linear problem, not a sequence");
    }
    const std::optional<FixedPointProblem> p = load_problem(cfg);
    if (!p)
    {
        throw ParseError("<arguments>", 1, 1, "no input: give --linear T d");
    }
    if (!p->is_linear())
    {
        throw WrongProblemKind("krylov-compare needs a linear problem");
    }
    const WeightOperator w = io::parse_weight_spec(cfg.weight, p->dimension());
    KrylovOptions kopts;
    kopts.existence_tolerance = cfg.tau_exist;
    const EquivalenceReport rep =
        equivalence_check(*p, w, cfg.k_max, kopts, extrapolation_options(cfg), relation_options(cfg));
    if (!cfg.output.empty())
    {
        io::save_json(cfg.output, io::to_json(rep));
    }

    bool passed = rep.nonexistence_aligned();
    out << pad("k", 5) << pad("mpe", 5) << pad("fom", 5) << pad("|w_FOM - s_MPE|", 18) << "|w_GMR - s_RRE|\n";
    for (const EquivalenceEntry& e : rep.entries)
    {
        out << pad(std::to_string(e.k), 5) << pad(e.mpe_exists ? "yes" : "no", 5)
            << pad(!e.krylov_available ? "-" : e.fom_defined ? "yes" : "no", 5) << pad(opt_sci(e.fom_defect), 18)
            << opt_sci(e.gmr_defect) << '\n';
        for (const std::optional<double>& d : {e.fom_defect, e.gmr_defect})
        {
            passed = passed && (!d || *d < cfg.krylov_tolerance);
        }
    }
    out << (passed ? "PASS" : "FAIL") << " (tolerance " << sci(cfg.krylov_tolerance) << ")\n";
    return passed ? ok : relation_defect;
}

inline int cmd_qr(const RunConfig& cfg, std::ostream& out)
{
    if (cfg.matrix.empty())
    {
        throw ParseError("<arguments>", 1, 1, "qr needs --matrix");
    }
    const Matrix a = io::read_dense_matrix(cfg.matrix);
    const WeightOperator w = io::parse_weight_spec(cfg.weight, a.rows());
    QrOptions opts;
    opts.rank_tolerance = cfg.tau_rank;
    const WQRFactors f = mgs_factorize(a, w, opts);
    const std::string q_path = in_dir(cfg, "Q.mtx");
    const std::string r_path = in_dir(cfg, "R.mtx");
    io::write_matrix_market(q_path, f.q);
    io::write_matrix_market(r_path, f.r);
    out << "Q: " << q_path << "\nR: " << r_path << '\n';
    if (cfg.check)
    {
        out << "Q*MQ deviation: " << sci(orthogonality_deviation(f)) << '\n';
        const double scale = a.norm();
        out << "A - QR relative: " << sci(scale > 0.0 ? (a - f.q * f.r).norm() / scale : 0.0) << '\n';
    }
    return ok;
}

inline void add_inputs(CLI::App* sub, RunConfig& cfg)
{
    sub->add_option("--sequence", cfg.sequence, "text file, one vector per line");
    sub->add_option("--linear", cfg.linear, "T (Matrix Market) and d (vector file)")->expected(2);
    sub->add_option("--nonlinear", cfg.nonlinear, "built-in map: cosine or quadratic");
    sub->add_option("--dim", cfg.dim, "dimension for --nonlinear");
    sub->add_option("--x0", cfg.x0, "initial vector file, or 'zero'");
    sub->add_option("--iters", cfg.iters, "number of iterations (default k-max + 1)");
}

inline void add_method(CLI::App* sub, RunConfig& cfg)
{
    sub->add_option("--weight", cfg.weight, "identity | diag:<file> | dense:<file>");
    sub->add_option("--k-max", cfg.k_max, "last stage")->check(CLI::NonNegativeNumber);
    sub->add_option("--tau-exist", cfg.tau_exist, "MPE existence tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--tau-rank", cfg.tau_rank, "rank tolerance")->check(CLI::PositiveNumber);
}

inline void add_relations(CLI::App* sub, RunConfig& cfg)
{
    sub->add_option("--tau-stag", cfg.tau_stag, "stagnation tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--tau-plateau", cfg.tau_plateau, "plateau tolerance")->check(CLI::PositiveNumber);
}

inline int exit_code(std::ostream& err, const std::string& context, const std::exception& ex)
{
    int code = io_error;
    if (dynamic_cast<const DimensionMismatch*>(&ex) != nullptr ||
        dynamic_cast<const InsufficientVectors*>(&ex) != nullptr)
    {
        code = dimension_error;
    }
    else if (dynamic_cast<const WrongProblemKind*>(&ex) != nullptr)
    {
        code = wrong_kind;
    }
    else if (const auto* rd = dynamic_cast<const RankDeficient*>(&ex))
    {
        err << context << ": rank deficient, detected k0 = " << rd->index() << '\n';
        return rank_error;
    }
    else if (dynamic_cast<const TheoremViolation*>(&ex) != nullptr)
    {
        code = relation_defect;
    }
    err << context << ": " << ex.what() << '\n';
    return code;
}

} // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    RunConfig cfg;
    CLI::App app("Vector extrapolation (MPE/RRE) under weighted inner products", "wextrap");
    app.require_subcommand(1);

    CLI::App* acc = app.add_subcommand("accelerate", "run MPE/RRE and write the history");
    detail::add_inputs(acc, cfg);
    detail::add_method(acc, cfg);
    acc->add_option("--methods", cfg.methods, "mpe | rre | both");
    acc->add_option("--tau-stag", cfg.tau_stag, "stagnation tolerance for the table")->check(CLI::PositiveNumber);
    acc->add_option("--output", cfg.output, "JSON history path");
    acc->add_option("--csv", cfg.csv, "CSV path (k, phi_mpe, phi_rre)");
    acc->add_option("--output-dir", cfg.output_dir, "default output directory");
    acc->add_flag("--quiet", cfg.quiet, "no table");

    CLI::App* ver = app.add_subcommand("verify-relations", "check the MPE/RRE relations");
    detail::add_inputs(ver, cfg);
    detail::add_method(ver, cfg);
    detail::add_relations(ver, cfg);
    ver->add_option("--history", cfg.history, "saved JSON history instead of running");
    ver->add_option("--threshold", cfg.defect_threshold, "defect threshold")->check(CLI::PositiveNumber);
    ver->add_option("--output", cfg.output, "JSON report path");

    CLI::App* kry = app.add_subcommand("krylov-compare", "compare FOM/GMR with MPE/RRE");
    detail::add_inputs(kry, cfg);
    detail::add_method(kry, cfg);
    detail::add_relations(kry, cfg);
    kry->add_option("--tolerance", cfg.krylov_tolerance, "pass tolerance")->check(CLI::PositiveNumber);
    kry->add_option("--output", cfg.output, "JSON report path");

    CLI::App* fac = app.add_subcommand("qr", "weighted QR of a Matrix Market file");
    fac->add_option("--matrix", cfg.matrix, "input matrix")->required();
    fac->add_option("--weight", cfg.weight, "identity | diag:<file> | dense:<file>");
    fac->add_option("--tau-rank", cfg.tau_rank, "rank tolerance")->check(CLI::PositiveNumber);
    fac->add_option("--output-dir", cfg.output_dir, "directory for Q.mtx and R.mtx");
    fac->add_flag("--check", cfg.check, "print Q*MQ deviation");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp&)
    {
        out << app.help();
        return ok;
    }
    catch (const CLI::CallForAllHelp&)
    {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    }
    catch (const CLI::ParseError& ex)
    {
        err << "wextrap: " << ex.what() << '\n';
        return io_error;
    }
    for (CLI::App* sub : {acc, ver, kry})
    {
        if (sub->parsed())
        {
            cfg.weight_given = sub->count("--weight") > 0;
        }
    }

    const std::string context = app.get_subcommands().front()->get_name();
    try
    {
        if (acc->parsed())
        {
            return detail::cmd_accelerate(cfg, out);
        }
        if (ver->parsed())
        {
            return detail::cmd_verify(cfg, out);
        }
        if (kry->parsed())
        {
            return detail::cmd_krylov(cfg, out);
        }
        return detail::cmd_qr(cfg, out);
    }
    catch (const json::exception& ex)
    {
        err << context << ": " << ex.what() << '\n';
        return io_error;
    }
    catch (const std::exception& ex)
    {
        return detail::exit_code(err, context, ex);
    }
}

} // namespace wextrap::cli

#endif // WEXTRAP_CLI_HPP
