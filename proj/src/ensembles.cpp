#include "logdet/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "logdet/errors.hpp"

namespace logdet::ensembles {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep))
        parts.push_back(trim(cur));
    if (!s.empty() && s.back() == sep)
        parts.emplace_back();
    return parts;
}

double parse_real(const std::string& s, const std::string& context)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v))
            throw FormatError("");
        return v;
    } catch (const std::exception&) {
        throw FormatError(context + ": cannot parse number '" + s + "'");
    }
}

std::size_t parse_count(const std::string& s, const std::string& context)
{
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
        throw FormatError(context + ": cannot parse count '" + s + "'");
    return static_cast<std::size_t>(std::stoull(s));
}

Complex parse_complex(const std::string& s, const std::string& context)
{
    const auto colon = s.find(':');
    if (colon == std::string::npos)
        return {parse_real(s, context), 0.0};
    return {parse_real(s.substr(0, colon), context), parse_real(s.substr(colon + 1), context)};
}

std::string format_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_complex(Complex z)
{
    if (z.imag() == 0.0)
        return format_number(z.real());
    return format_number(z.real()) + ":" + format_number(z.imag());
}

} // namespace

std::string to_string(MatrixKind kind)
{
    switch (kind) {
    case MatrixKind::jordan: return "jordan";
    case MatrixKind::bidiagonal_toeplitz: return "bidiagonal_toeplitz";
    case MatrixKind::diagonal: return "diagonal";
    case MatrixKind::zero: return "zero";
    case MatrixKind::file: return "file";
    }
    return "unknown";
}

MatrixSpec parse_matrix_spec(const std::string& text, std::size_t n)
{
    const std::string context = "matrix spec '" + text + "'";
    MatrixSpec spec;
    spec.n = n;

    std::string body = trim(text);
    if (const auto at = body.rfind('@'); at != std::string::npos && body.rfind("file:", 0) != 0) {
        spec.shift = parse_complex(body.substr(at + 1), context);
        body = body.substr(0, at);
    }

    const auto colon = body.find(':');
    const std::string head = body.substr(0, colon);
    const std::string rest = colon == std::string::npos ? std::string() : body.substr(colon + 1);

    if (head == "jordan" && rest.empty()) {
        spec.kind = MatrixKind::jordan;
    } else if (head == "zero" && rest.empty()) {
        spec.kind = MatrixKind::zero;
    } else if ((head == "bidiag" || head == "bidiagonal_toeplitz") && !rest.empty()) {
        const auto parts = split(rest, ',');
        if (parts.size() != 2)
            throw FormatError(context + ": bidiag expects two entries a,b");
        spec.kind = MatrixKind::bidiagonal_toeplitz;
        spec.a = parse_complex(parts[0], context);
        spec.b = parse_complex(parts[1], context);
    } else if ((head == "diag" || head == "diagonal") && !rest.empty()) {
        spec.kind = MatrixKind::diagonal;
        for (const auto& item : split(rest, ',')) {
            const auto x = item.rfind('x');
            if (x == std::string::npos)
                spec.diagonal.push_back({parse_real(item, context), 0});
            else
                spec.diagonal.push_back({parse_real(item.substr(0, x), context),
                                         parse_count(item.substr(x + 1), context)});
        }
    } else if (head == "file" && !rest.empty()) {
        spec.kind = MatrixKind::file;
        spec.path = rest;
    } else {
        throw FormatError(context + ": expected jordan, zero, bidiag:A,B, diag:V[xK],... or file:PATH");
    }
    diagonal_entries(spec); // validates run lengths
    return spec;
}

std::string format_matrix_spec(const MatrixSpec& spec)
{
    std::string out;
    switch (spec.kind) {
    case MatrixKind::jordan: out = "jordan"; break;
    case MatrixKind::zero: out = "zero"; break;
    case MatrixKind::bidiagonal_toeplitz: out = "bidiag:" + format_complex(spec.a) + "," + format_complex(spec.b); break;
    case MatrixKind::diagonal:
        out = "diag:";
        for (std::size_t i = 0; i < spec.diagonal.size(); ++i) {
            if (i > 0)
                out += ",";
            out += format_number(spec.diagonal[i].value);
            if (spec.diagonal[i].multiplicity > 0)
                out += "x" + std::to_string(spec.diagonal[i].multiplicity);
        }
        break;
    case MatrixKind::file: return "file:" + spec.path;
    }
    if (spec.shift)
        out += "@" + format_complex(*spec.shift);
    return out;
}

MatrixSpec resized(const MatrixSpec& spec, std::size_t n)
{
    MatrixSpec out = spec;
    out.n = n;
    if (out.kind == MatrixKind::file)
        throw ConfigError("file-backed matrices have a fixed size and cannot be swept");
    diagonal_entries(out);
    return out;
}

std::vector<double> diagonal_entries(const MatrixSpec& spec)
{
    if (spec.kind != MatrixKind::diagonal)
        return {};
    if (spec.diagonal.empty())
        throw FormatError("diagonal spec needs at least one value");
    const bool shares = std::all_of(spec.diagonal.begin(), spec.diagonal.end(),
                                    [](const DiagonalRun& r) { return r.multiplicity == 0; });
    const bool explicit_runs = std::none_of(spec.diagonal.begin(), spec.diagonal.end(),
                                            [](const DiagonalRun& r) { return r.multiplicity == 0; });
    if (!shares && !explicit_runs)
        throw FormatError("diagonal spec mixes runs with and without multiplicities");

    std::vector<double> out;
    out.reserve(spec.n);
    if (shares) {
        if (spec.n % spec.diagonal.size() != 0)
            throw FormatError("diagonal spec: " + std::to_string(spec.diagonal.size()) +
                              " values do not divide N = " + std::to_string(spec.n));
        const std::size_t each = spec.n / spec.diagonal.size();
        for (const auto& r : spec.diagonal)
            out.insert(out.end(), each, r.value);
    } else {
        for (const auto& r : spec.diagonal)
            out.insert(out.end(), r.multiplicity, r.value);
        if (out.size() != spec.n)
            throw FormatError("diagonal spec: multiplicities sum to " + std::to_string(out.size()) +
                              " but N = " + std::to_string(spec.n));
    }
    return out;
}

ComplexMatrix realize(const MatrixSpec& spec)
{
    if (spec.n < 1)
        throw DimensionError("matrix spec: N must be at least 1");
    const auto n = static_cast<Eigen::Index>(spec.n);
    ComplexMatrix a = ComplexMatrix::Zero(n, n);
    switch (spec.kind) {
    case MatrixKind::jordan:
        for (Eigen::Index i = 0; i + 1 < n; ++i)
            a(i, i + 1) = 1.0;
        break;
    case MatrixKind::bidiagonal_toeplitz:
        for (Eigen::Index i = 0; i < n; ++i) {
            a(i, i) = spec.a;
            if (i + 1 < n)
                a(i, i + 1) = spec.b;
        }
        break;
    case MatrixKind::diagonal: {
        const auto d = diagonal_entries(spec);
        for (Eigen::Index i = 0; i < n; ++i)
            a(i, i) = d[static_cast<std::size_t>(i)];
        break;
    }
    case MatrixKind::zero: break;
    case MatrixKind::file:
        a = read_matrix_file(spec.path);
        if (a.rows() != n)
            throw FormatError("matrix file '" + spec.path + "' has N = " + std::to_string(a.rows()) +
                              " but the spec requests N = " + std::to_string(spec.n));
        break;
    }
    if (spec.shift)
        a = *spec.shift * ComplexMatrix::Identity(n, n) - a;
    linalg::require_finite(a, "realize");
    return a;
}

std::optional<std::vector<double>> known_singvals(const MatrixSpec& spec)
{
    const Complex z = spec.shift.value_or(Complex(0.0, 0.0));
    std::vector<double> s;
    switch (spec.kind) {
    case MatrixKind::jordan:
        if (z != Complex(0.0, 0.0))
            return std::nullopt;
        s.assign(spec.n - 1, 1.0);
        s.push_back(0.0);
        return s;
    case MatrixKind::diagonal:
        for (double v : diagonal_entries(spec))
            s.push_back(std::abs(z - Complex(v, 0.0)));
        break;
    case MatrixKind::zero: s.assign(spec.n, std::abs(z)); break;
    case MatrixKind::bidiagonal_toeplitz:
    case MatrixKind::file: return std::nullopt;
    }
    std::sort(s.begin(), s.end(), std::greater<>());
    return s;
}

std::vector<double> spectrum(const MatrixSpec& spec, const ComplexMatrix& a)
{
    if (auto known = known_singvals(spec))
        return std::move(*known);
    return linalg::singular_values_descending(a);
}

std::optional<double> norm_bound(const MatrixSpec& spec)
{
    const double shift = spec.shift ? std::abs(*spec.shift) : 0.0;
    switch (spec.kind) {
    case MatrixKind::jordan: return (spec.n > 1 ? 1.0 : 0.0) + shift;
    case MatrixKind::bidiagonal_toeplitz: return std::abs(spec.a) + std::abs(spec.b) + shift;
    case MatrixKind::diagonal: {
        double m = 0.0;
        for (const auto& r : spec.diagonal)
            m = std::max(m, std::abs(r.value));
        return m + shift;
    }
    case MatrixKind::zero: return shift;
    case MatrixKind::file: return std::nullopt;
    }
    return std::nullopt;
}

ComplexMatrix read_matrix_csv(std::istream& is)
{
    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> bool {
        while (std::getline(is, line)) {
            ++line_no;
            if (!trim(line).empty())
                return true;
        }
        return false;
    };
    if (!next_line())
        throw FormatError("matrix CSV: missing header line with N");
    const std::size_t n = parse_count(trim(line), "matrix CSV line 1");
    if (n < 1)
        throw FormatError("matrix CSV: N must be at least 1");
    const auto ni = static_cast<Eigen::Index>(n);
    ComplexMatrix a(ni, ni);
    for (Eigen::Index i = 0; i < ni; ++i) {
        if (!next_line())
            throw FormatError("matrix CSV: expected " + std::to_string(n) + " rows, found " + std::to_string(i));
        const std::string ctx = "matrix CSV line " + std::to_string(line_no);
        const auto cells = split(trim(line), ',');
        if (cells.size() != n)
            throw FormatError(ctx + ": expected " + std::to_string(n) + " cells, found " +
                              std::to_string(cells.size()));
        for (Eigen::Index j = 0; j < ni; ++j)
            a(i, j) = parse_complex(cells[static_cast<std::size_t>(j)], ctx);
    }
    if (next_line())
        throw FormatError("matrix CSV: more than " + std::to_string(n) + " rows");
    return a;
}

ComplexMatrix read_matrix_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open matrix file '" + path + "'");
    return read_matrix_csv(in);
}

void write_matrix_csv(std::ostream& os, const ComplexMatrix& a)
{
    os << a.rows() << '\n';
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (j > 0)
                os << ',';
            os << format_number(a(i, j).real()) << ':' << format_number(a(i, j).imag());
        }
        os << '\n';
    }
}

} // namespace logdet::ensembles
