///
/// \file io.hpp
///
/// File formats: Matrix Market matrices, plain-text vectors and sequences,
/// weight specifications, and JSON/CSV run histories and reports.
///
/// Vector files hold whitespace-separated entries, each either a real number
/// ("0.5") or a complex pair ("(0.5,-1)"). Sequence files hold one vector per
/// line; blank lines and lines starting with '#' are skipped.
///

#ifndef WEXTRAP_IO_HPP
#define WEXTRAP_IO_HPP

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <json.hpp>

#include <wextrap/extrap.hpp>
#include <wextrap/krylov.hpp>
#include <wextrap/problem.hpp>
#include <wextrap/relations.hpp>
#include <wextrap/types.hpp>
#include <wextrap/wqr.hpp>
#include <wextrap/wspace.hpp>

namespace wextrap::io
{

using json = nlohmann::json;

namespace detail
{

struct Token
{
    std::string text;
    std::size_t column = 1; ///< 1-based
};

inline std::vector<Token> split(const std::string& line)
{
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size())
    {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
        {
            ++i;
        }
        if (i >= line.size())
        {
            break;
        }
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])))
        {
            ++i;
        }
        out.push_back({line.substr(start, i - start), start + 1});
    }
    return out;
}

inline std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline double parse_real(const std::string& source, std::size_t line, const Token& t)
{
    std::size_t used = 0;
    double v = 0.0;
    try
    {
        v = std::stod(t.text, &used);
    }
    catch (const std::exception&)
    {
        throw ParseError(source, line, t.column, "expected a number, got '" + t.text + "'");
    }
    if (used != t.text.size())
    {
        throw ParseError(source, line, t.column + used, "trailing characters in '" + t.text + "'");
    }
    return v;
}

inline long long parse_integer(const std::string& source, std::size_t line, const Token& t)
{
    std::size_t used = 0;
    long long v = 0;
    try
    {
        v = std::stoll(t.text, &used);
    }
    catch (const std::exception&)
    {
        throw ParseError(source, line, t.column, "expected an integer, got '" + t.text + "'");
    }
    if (used != t.text.size())
    {
        throw ParseError(source, line, t.column + used, "trailing characters in '" + t.text + "'");
    }
    return v;
}

/// "re" or "(re,im)"
inline Scalar parse_scalar(const std::string& source, std::size_t line, const Token& t)
{
    const std::string& s = t.text;
    if (!s.empty() && s.front() == '(')
    {
        const std::size_t comma = s.find(',');
        if (s.back() != ')' || comma == std::string::npos)
        {
            throw ParseError(source, line, t.column, "malformed complex entry '" + s + "'");
        }
        const Token re{s.substr(1, comma - 1), t.column + 1};
        const Token im{s.substr(comma + 1, s.size() - comma - 2), t.column + comma + 1};
        return {parse_real(source, line, re), parse_real(source, line, im)};
    }
    return {parse_real(source, line, t), 0.0};
}

inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string format_scalar(const Scalar& v)
{
    if (v.imag() == 0.0)
    {
        return format_double(v.real());
    }
    return "(" + format_double(v.real()) + "," + format_double(v.imag()) + ")";
}

inline std::ifstream open_in(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw IoError("cannot open '" + path + "' for reading");
    }
    return in;
}

inline std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
    {
        throw IoError("cannot open '" + path + "' for writing");
    }
    return out;
}

} // namespace detail

//
// Matrix Market
//

struct MatrixMarketData
{
    enum class Format
    {
        coordinate,
        array
    };
    Format format = Format::coordinate;
    bool complex = false;
    std::string symmetry = "general";
    SparseMatrix matrix;
};

inline MatrixMarketData read_matrix_market(std::istream& in, const std::string& source = "<stream>")
{
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line))
    {
        throw ParseError(source, 1, 1, "empty file, expected a %%MatrixMarket header");
    }
    ++lineno;
    const std::vector<detail::Token> head = detail::split(line);
    if (head.size() != 5 || head[0].text != "%%MatrixMarket" || detail::lower(head[1].text) != "matrix")
    {
        throw ParseError(source, lineno, 1,
                         "header must read '%%MatrixMarket matrix <format> <field> <symmetry>'");
    }
    MatrixMarketData data;
    const std::string format = detail::lower(head[2].text);
    const std::string field = detail::lower(head[3].text);
    data.symmetry = detail::lower(head[4].text);
    if (format == "coordinate")
    {
        data.format = MatrixMarketData::Format::coordinate;
    }
    else if (format == "array")
    {
        data.format = MatrixMarketData::Format::array;
    }
    else
    {
        throw ParseError(source, lineno, head[2].column, "unsupported format '" + head[2].text + "'");
    }
    if (field == "complex")
    {
        data.complex = true;
    }
    else if (field != "real" && field != "integer")
    {
        throw ParseError(source, lineno, head[3].column, "unsupported field '" + head[3].text + "'");
    }
    if (data.symmetry != "general" && data.symmetry != "symmetric" && data.symmetry != "hermitian" &&
        data.symmetry != "skew-symmetric")
    {
        throw ParseError(source, lineno, head[4].column, "unsupported symmetry '" + head[4].text + "'");
    }
    if (data.symmetry == "hermitian" && !data.complex)
    {
        data.symmetry = "symmetric";
    }

    auto next_data_line = [&](std::vector<detail::Token>& toks) {
        while (std::getline(in, line))
        {
            ++lineno;
            if (!line.empty() && line[0] == '%')
            {
                continue;
            }
            toks = detail::split(line);
            if (!toks.empty())
            {
                return true;
            }
        }
        return false;
    };

    std::vector<detail::Token> toks;
    if (!next_data_line(toks))
    {
        throw ParseError(source, lineno + 1, 1, "missing size line");
    }
    const bool coord = data.format == MatrixMarketData::Format::coordinate;
    if (toks.size() != (coord ? 3u : 2u))
    {
        throw ParseError(source, lineno, 1, coord ? "size line must be 'rows cols nnz'" : "size line must be 'rows cols'");
    }
    const long long rows = detail::parse_integer(source, lineno, toks[0]);
    const long long cols = detail::parse_integer(source, lineno, toks[1]);
    if (rows < 0 || cols < 0)
    {
        throw ParseError(source, lineno, 1, "negative dimension");
    }
    const bool symmetric = data.symmetry != "general";
    if (symmetric && rows != cols)
    {
        throw ParseError(source, lineno, 1, "symmetric storage needs a square matrix");
    }
    const std::size_t per_entry = data.complex ? 2 : 1;

    auto read_value = [&](const std::vector<detail::Token>& t, std::size_t first) -> Scalar {
        const double re = detail::parse_real(source, lineno, t[first]);
        const double im = data.complex ? detail::parse_real(source, lineno, t[first + 1]) : 0.0;
        return {re, im};
    };

    std::vector<Eigen::Triplet<Scalar>> entries;
    auto add = [&](Index i, Index j, Scalar v) {
        entries.emplace_back(i, j, v);
        if (symmetric && i != j)
        {
            Scalar mirrored = v;
            if (data.symmetry == "hermitian")
            {
                mirrored = std::conj(v);
            }
            else if (data.symmetry == "skew-symmetric")
            {
                mirrored = -v;
            }
            entries.emplace_back(j, i, mirrored);
        }
    };

    if (coord)
    {
        const long long nnz = detail::parse_integer(source, lineno, toks[2]);
        if (nnz < 0)
        {
            throw ParseError(source, lineno, toks[2].column, "negative entry count");
        }
        for (long long e = 0; e < nnz; ++e)
        {
            if (!next_data_line(toks))
            {
                throw ParseError(source, lineno + 1, 1,
                                 "expected " + std::to_string(nnz) + " entries, found " + std::to_string(e));
            }
            if (toks.size() != 2 + per_entry)
            {
                throw ParseError(source, lineno, 1,
                                 "entry needs " + std::to_string(2 + per_entry) + " fields");
            }
            const long long i = detail::parse_integer(source, lineno, toks[0]);
            const long long j = detail::parse_integer(source, lineno, toks[1]);
            if (i < 1 || i > rows)
            {
                throw ParseError(source, lineno, toks[0].column, "row index out of range");
            }
            if (j < 1 || j > cols)
            {
                throw ParseError(source, lineno, toks[1].column, "column index out of range");
            }
            add(static_cast<Index>(i - 1), static_cast<Index>(j - 1), read_value(toks, 2));
        }
    }
    else
    {
        // Column-major; symmetric variants list the lower triangle only.
        for (long long j = 0; j < cols; ++j)
        {
            for (long long i = symmetric ? j : 0; i < rows; ++i)
            {
                if (data.symmetry == "skew-symmetric" && i == j)
                {
                    continue;
                }
                if (!next_data_line(toks))
                {
                    throw ParseError(source, lineno + 1, 1, "array data ends early");
                }
                if (toks.size() != per_entry)
                {
                    throw ParseError(source, lineno, 1,
                                     "array entry needs " + std::to_string(per_entry) + " field(s)");
                }
                add(static_cast<Index>(i), static_cast<Index>(j), read_value(toks, 0));
            }
        }
    }
    if (next_data_line(toks))
    {
        throw ParseError(source, lineno, 1, "unexpected data after the last entry");
    }
    data.matrix = SparseMatrix(static_cast<Index>(rows), static_cast<Index>(cols));
    // Duplicates are summed; explicit zeros stay stored.
    data.matrix.setFromTriplets(entries.begin(), entries.end());
    return data;
}

inline MatrixMarketData read_matrix_market(const std::string& path)
{
    std::ifstream in = detail::open_in(path);
    return read_matrix_market(in, path);
}

inline SparseMatrix read_sparse_matrix(const std::string& path) { return read_matrix_market(path).matrix; }

inline Matrix read_dense_matrix(const std::string& path) { return Matrix(read_matrix_market(path).matrix); }

/// Array format, general symmetry; "complex" only when some entry has a
/// nonzero imaginary part.
inline void write_matrix_market(std::ostream& out, const Matrix& a)
{
    const bool complex = (a.imag().array() != 0.0).any();
    out << "%%MatrixMarket matrix array " << (complex ? "complex" : "real") << " general\n";
    out << a.rows() << ' ' << a.cols() << '\n';
    for (Index j = 0; j < a.cols(); ++j)
    {
        for (Index i = 0; i < a.rows(); ++i)
        {
            out << detail::format_double(a(i, j).real());
            if (complex)
            {
                out << ' ' << detail::format_double(a(i, j).imag());
            }
            out << '\n';
        }
    }
}

/// Coordinate format, every stored entry (including explicit zeros).
inline void write_matrix_market(std::ostream& out, const SparseMatrix& a)
{
    bool complex = false;
    for (Index k = 0; k < a.outerSize(); ++k)
    {
        for (SparseMatrix::InnerIterator it(a, k); it; ++it)
        {
            complex = complex || it.value().imag() != 0.0;
        }
    }
    out << "%%MatrixMarket matrix coordinate " << (complex ? "complex" : "real") << " general\n";
    out << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
    for (Index k = 0; k < a.outerSize(); ++k)
    {
        for (SparseMatrix::InnerIterator it(a, k); it; ++it)
        {
            out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << detail::format_double(it.value().real());
            if (complex)
            {
                out << ' ' << detail::format_double(it.value().imag());
            }
            out << '\n';
        }
    }
}

template <typename M>
void write_matrix_market(const std::string& path, const M& a)
{
    std::ofstream out = detail::open_out(path);
    write_matrix_market(out, a);
    if (!out)
    {
        throw IoError("write to '" + path + "' failed");
    }
}

//
// Vectors and sequences
//

inline Vector parse_vector_line(const std::string& line, const std::string& source, std::size_t lineno)
{
    const std::vector<detail::Token> toks = detail::split(line);
    Vector v(static_cast<Index>(toks.size()));
    for (std::size_t i = 0; i < toks.size(); ++i)
    {
        v[static_cast<Index>(i)] = detail::parse_scalar(source, lineno, toks[i]);
    }
    return v;
}

inline Vector read_vector(std::istream& in, const std::string& source = "<stream>")
{
    // A Matrix Market file holding a single row or column is accepted too.
    if (in.peek() == '%')
    {
        std::string first;
        std::getline(in, first);
        if (first.rfind("%%MatrixMarket", 0) == 0)
        {
            std::istringstream rest(first + "\n" + std::string(std::istreambuf_iterator<char>(in), {}));
            const Matrix m(read_matrix_market(rest, source).matrix);
            if (m.cols() != 1 && m.rows() != 1)
            {
                throw DimensionMismatch(source + ": expected a single row or column");
            }
            return m.cols() == 1 ? Vector(m.col(0)) : Vector(m.row(0).transpose());
        }
    }
    std::vector<Scalar> values;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line))
    {
        ++lineno;
        if (!line.empty() && (line[0] == '#' || line[0] == '%'))
        {
            continue;
        }
        const Vector part = parse_vector_line(line, source, lineno);
        values.insert(values.end(), part.data(), part.data() + part.size());
    }
    if (values.empty())
    {
        throw ParseError(source, std::max<std::size_t>(lineno, 1), 1, "no vector entries");
    }
    return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

inline Vector read_vector(const std::string& path)
{
    std::ifstream in = detail::open_in(path);
    return read_vector(in, path);
}

inline RealVector read_real_vector(const std::string& path)
{
    const Vector v = read_vector(path);
    if ((v.imag().array() != 0.0).any())
    {
        throw ParseError(path, 1, 1, "expected real entries");
    }
    return v.real();
}

/// One entry per line.
inline void write_vector(std::ostream& out, const Vector& v)
{
    for (Index i = 0; i < v.size(); ++i)
    {
        out << detail::format_scalar(v[i]) << '\n';
    }
}

inline void write_vector(const std::string& path, const Vector& v)
{
    std::ofstream out = detail::open_out(path);
    write_vector(out, v);
}

inline VectorSequence read_sequence(std::istream& in, const std::string& source = "<stream>")
{
    std::vector<Vector> xs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line))
    {
        ++lineno;
        if (!line.empty() && line[0] == '#')
        {
            continue;
        }
        if (detail::split(line).empty())
        {
            continue;
        }
        Vector v = parse_vector_line(line, source, lineno);
        if (!xs.empty() && v.size() != xs.front().size())
        {
            throw DimensionMismatch(source + ":" + std::to_string(lineno) + ": vector has " +
                                    std::to_string(v.size()) + " entries, expected " +
                                    std::to_string(xs.front().size()));
        }
        xs.push_back(std::move(v));
    }
    if (xs.size() < 2)
    {
        throw InsufficientVectors(source + ": a sequence needs at least two vectors");
    }
    return VectorSequence(std::move(xs));
}

inline VectorSequence read_sequence(const std::string& path)
{
    std::ifstream in = detail::open_in(path);
    return read_sequence(in, path);
}

/// One vector per line, entries separated by single spaces.
inline void write_sequence(std::ostream& out, const std::vector<Vector>& xs)
{
    for (const Vector& x : xs)
    {
        for (Index i = 0; i < x.size(); ++i)
        {
            out << (i == 0 ? "" : " ") << detail::format_scalar(x[i]);
        }
        out << '\n';
    }
}

inline void write_sequence(const std::string& path, const std::vector<Vector>& xs)
{
    std::ofstream out = detail::open_out(path);
    write_sequence(out, xs);
}

//
// Weights
//

/// "identity", "diag:<vector file>" or "dense:<Matrix Market file>".
inline WeightOperator parse_weight_spec(const std::string& spec, Index n)
{
    WeightOperator w = WeightOperator::identity(n);
    if (spec == "identity" || spec.empty())
    {
        return w;
    }
    if (spec.rfind("diag:", 0) == 0)
    {
        w = WeightOperator::diagonal(read_real_vector(spec.substr(5)));
    }
    else if (spec.rfind("dense:", 0) == 0)
    {
        w = WeightOperator::dense(read_dense_matrix(spec.substr(6)));
    }
    else
    {
        throw ParseError("--weight", 1, 1, "expected identity, diag:<file> or dense:<file>, got '" + spec + "'");
    }
    wextrap::detail::require_dimension(n, w.dimension(), "weight");
    return w;
}

//
// JSON
//

inline json to_json(const Scalar& v) { return json::array({v.real(), v.imag()}); }

inline json to_json(const Vector& v)
{
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i)
    {
        a.push_back(to_json(v[i]));
    }
    return a;
}

inline Scalar scalar_from_json(const json& j)
{
    if (j.is_number())
    {
        return {j.get<double>(), 0.0};
    }
    if (!j.is_array() || j.size() != 2)
    {
        throw ParseError("<json>", 1, 1, "complex value must be [re, im]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

inline Vector vector_from_json(const json& j)
{
    if (!j.is_array())
    {
        throw ParseError("<json>", 1, 1, "vector must be an array");
    }
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
    {
        v[static_cast<Index>(i)] = scalar_from_json(j[i]);
    }
    return v;
}

inline json to_json(const MethodResult& r)
{
    return json{{"gamma", to_json(r.gamma)}, {"s", to_json(r.s)}, {"phi", r.phi}};
}

inline MethodResult method_from_json(const json& j, const Vector& x0, const WQRFactors& f)
{
    MethodResult r;
    r.gamma = vector_from_json(j.at("gamma"));
    r.phi = j.at("phi").get<double>();
    wextrap::detail::Assembly a;
    if (f.columns() >= r.gamma.size() - 1)
    {
        a = wextrap::detail::assemble_parts(x0, f, r.gamma);
    }
    r.xi = std::move(a.xi);
    r.eta = std::move(a.eta);
    r.s = j.contains("s") ? vector_from_json(j.at("s")) : std::move(a.s);
    return r;
}

inline json history_to_json(const RunHistory& h, const std::string& weight_spec = "identity")
{
    json records = json::array();
    for (const ExtrapolationRecord& rec : h.records)
    {
        json r{{"k", rec.k},
               {"mpe_exists", rec.mpe_exists},
               {"at_k0", rec.at_k0},
               {"alpha", to_json(rec.alpha)},
               {"lambda", rec.lambda},
               {"mpe", rec.mpe ? to_json(*rec.mpe) : json(nullptr)},
               {"rre", rec.rre ? to_json(*rec.rre) : json(nullptr)}};
        records.push_back(std::move(r));
    }
    json u = json::array();
    for (const Vector& v : h.differences.u)
    {
        u.push_back(to_json(v));
    }
    return json{{"format", "wextrap-history"},
                {"version", 1},
                {"status", to_string(h.status)},
                {"k0", h.k0 ? json(*h.k0) : json(nullptr)},
                {"weight", weight_spec},
                {"methods", json{{"mpe", h.methods.mpe}, {"rre", h.methods.rre}}},
                {"options",
                 json{{"existence_tolerance", h.options.existence_tolerance},
                      {"converged_norm", h.options.converged_norm},
                      {"rank_tolerance", h.options.qr.rank_tolerance}}},
                {"x0", h.x.empty() ? json::array() : to_json(h.x.front())},
                {"differences", std::move(u)},
                {"records", std::move(records)}};
}

struct LoadedHistory
{
    RunHistory history;
    std::string weight_spec;
};

/// Inverse of history_to_json. The factors of U_k are recomputed from the
/// stored differences.
inline LoadedHistory history_from_json(const json& j, const WeightOperator* weight = nullptr)
{
    LoadedHistory out;
    try
    {
        if (j.value("format", std::string()) != "wextrap-history")
        {
            throw ParseError("<json>", 1, 1, "not a wextrap history");
        }
        RunHistory& h = out.history;
        out.weight_spec = j.value("weight", std::string("identity"));
        const std::string status = j.at("status").get<std::string>();
        h.status = status == "dependent"   ? RunStatus::dependent
                   : status == "converged" ? RunStatus::converged
                                           : RunStatus::completed;
        if (!j.at("k0").is_null())
        {
            h.k0 = j.at("k0").get<Index>();
            h.differences.detected_k0 = h.k0;
        }
        h.methods.mpe = j.at("methods").at("mpe").get<bool>();
        h.methods.rre = j.at("methods").at("rre").get<bool>();
        const json& o = j.at("options");
        h.options.existence_tolerance = o.at("existence_tolerance").get<double>();
        h.options.converged_norm = o.at("converged_norm").get<double>();
        h.options.qr.rank_tolerance = o.at("rank_tolerance").get<double>();
        const Vector x0 = vector_from_json(j.at("x0"));
        for (const json& u : j.at("differences"))
        {
            h.differences.u.push_back(vector_from_json(u));
            wextrap::detail::require_dimension(x0.size(), h.differences.u.back().size(), "history difference");
        }
        h.x.push_back(x0);
        for (const Vector& u : h.differences.u)
        {
            h.x.push_back(h.x.back() + u);
        }
        const Index full = h.k0 ? *h.k0 : static_cast<Index>(h.differences.u.size());
        const WeightOperator w_id = WeightOperator::identity(x0.size());
        const WeightOperator& w = weight != nullptr ? *weight : w_id;
        wextrap::detail::require_dimension(x0.size(), w.dimension(), "history weight");
        h.factors = full > 0 ? mgs_factorize(std::vector<Vector>(h.differences.u.begin(), h.differences.u.begin() + full),
                                             w, h.options.qr)
                             : WQRFactors::empty(x0.size());
        for (const json& r : j.at("records"))
        {
            ExtrapolationRecord rec;
            rec.k = r.at("k").get<Index>();
            rec.mpe_exists = r.at("mpe_exists").get<bool>();
            rec.at_k0 = r.at("at_k0").get<bool>();
            rec.alpha = scalar_from_json(r.at("alpha"));
            rec.lambda = r.at("lambda").get<double>();
            if (!r.at("mpe").is_null())
            {
                rec.mpe = method_from_json(r.at("mpe"), x0, h.factors);
            }
            if (!r.at("rre").is_null())
            {
                rec.rre = method_from_json(r.at("rre"), x0, h.factors);
            }
            h.records.push_back(std::move(rec));
        }
    }
    catch (const json::exception& ex)
    {
        throw ParseError("<json>", 1, 1, std::string("malformed history: ") + ex.what());
    }
    return out;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline void save_json(const std::string& path, const json& j)
{
    std::ofstream out = detail::open_out(path);
    out << dump(j);
    if (!out)
    {
        throw IoError("write to '" + path + "' failed");
    }
}

inline json load_json(const std::string& path)
{
    std::ifstream in = detail::open_in(path);
    try
    {
        return json::parse(in);
    }
    catch (const json::parse_error& ex)
    {
        throw ParseError(path, 1, ex.byte, ex.what());
    }
}

inline void save_history(const std::string& path, const RunHistory& h, const std::string& weight_spec = "identity")
{
    save_json(path, history_to_json(h, weight_spec));
}

inline LoadedHistory load_history(const std::string& path, const WeightOperator* weight = nullptr)
{
    return history_from_json(load_json(path), weight);
}

/// k,phi_mpe,phi_rre; empty fields where a value is absent.
inline std::string history_csv(const RunHistory& h)
{
    std::ostringstream out;
    out << "k,phi_mpe,phi_rre\n";
    for (const ExtrapolationRecord& rec : h.records)
    {
        out << rec.k << ',';
        if (rec.mpe)
        {
            out << detail::format_double(rec.mpe->phi);
        }
        out << ',';
        if (rec.rre)
        {
            out << detail::format_double(rec.rre->phi);
        }
        out << '\n';
    }
    return out.str();
}

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json ranges_to_json(const std::vector<IndexRange>& rs)
{
    json a = json::array();
    for (const IndexRange& r : rs)
    {
        a.push_back(json::array({r.first, r.last}));
    }
    return a;
}

inline json to_json(const RelationReport& rep)
{
    json entries = json::array();
    for (const RelationEntry& e : rep.entries)
    {
        entries.push_back(json{{"k", e.k},
                               {"mpe_exists", e.mpe_exists},
                               {"stagnation_detected", e.stagnation_detected},
                               {"master_identity", optional_number(e.master_identity)},
                               {"inverse_square", optional_number(e.inverse_square)},
                               {"residual_combination", optional_number(e.residual_combination)},
                               {"extrapolant_combination", optional_number(e.extrapolant_combination)},
                               {"mpe_from_ratio", optional_number(e.mpe_from_ratio)},
                               {"inverse_square_sum", optional_number(e.inverse_square_sum)},
                               {"phi_rre_consistency", optional_number(e.phi_rre_consistency)},
                               {"phi_mpe_consistency", optional_number(e.phi_mpe_consistency)},
                               {"monotone", e.monotone},
                               {"s_k", e.s_k}});
    }
    json failures = json::array();
    for (const Offender& o : rep.failures)
    {
        failures.push_back(json{{"name", o.name}, {"k", o.k}, {"value", o.value}});
    }
    json out{{"passed", rep.passed()},
             {"threshold", rep.threshold},
             {"entries", std::move(entries)},
             {"failures", std::move(failures)},
             {"theorem_violation", rep.theorem_violation ? json(*rep.theorem_violation) : json(nullptr)}};
    if (rep.peak_plateau)
    {
        const PeakPlateauReport& pp = *rep.peak_plateau;
        out["peak_plateau"] = json{{"peaks", ranges_to_json(pp.peaks)},
                                   {"plateaus", ranges_to_json(pp.plateaus)},
                                   {"overlaps", ranges_to_json(pp.overlaps)},
                                   {"rre_ratios", pp.rre_ratios},
                                   {"plateau_tolerance", pp.plateau_tolerance}};
    }
    else
    {
        out["peak_plateau"] = nullptr;
    }
    return out;
}

inline json to_json(const EquivalenceReport& rep)
{
    json entries = json::array();
    for (const EquivalenceEntry& e : rep.entries)
    {
        entries.push_back(json{{"k", e.k},
                               {"mpe_exists", e.mpe_exists},
                               {"fom_defined", e.fom_defined},
                               {"krylov_available", e.krylov_available},
                               {"at_k0", e.at_k0},
                               {"fom_defect", optional_number(e.fom_defect)},
                               {"gmr_defect", optional_number(e.gmr_defect)},
                               {"residual_mpe", optional_number(e.residual_mpe)},
                               {"residual_rre", optional_number(e.residual_rre)},
                               {"gmr_vs_lambda", optional_number(e.gmr_vs_lambda)},
                               {"inverse_square", optional_number(e.inverse_square)},
                               {"residual_combination", optional_number(e.residual_combination)},
                               {"extrapolant_combination", optional_number(e.extrapolant_combination)},
                               {"mpe_from_ratio", optional_number(e.mpe_from_ratio)},
                               {"inverse_square_sum", optional_number(e.inverse_square_sum)},
                               {"strictly_decreasing", e.strictly_decreasing}});
    }
    return json{{"entries", std::move(entries)},
                {"nonexistence_aligned", rep.nonexistence_aligned()},
                {"max_solution_defect", rep.max_solution_defect()}};
}

} // namespace wextrap::io

#endif // WEXTRAP_IO_HPP
