#include "dataio.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "errors.hpp"

namespace kplane {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& tok, std::size_t line_no) {
    double v;
    const char* begin = tok.data();
    const char* end = begin + tok.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) {
        std::ostringstream msg;
        msg << "non-numeric value '" << tok << "' at line " << line_no;
        throw ParseError(msg.str());
    }
    return v;
}

std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

void atomic_write(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot open file for writing: " + tmp);
        out << contents;
        if (!out)
            throw IoError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw IoError("rename failed: " + path);
    }
}

Dataset read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw InvalidInputError("empty CSV file: " + path);
    const auto header = split(line, ',');
    if (header.size() < 2)
        throw ParseError("CSV header needs at least one feature and the target");
    const std::size_t d = header.size() - 1;

    std::vector<double> features;
    std::vector<double> targets;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split(line, ',');
        if (cells.size() != d + 1) {
            std::ostringstream msg;
            msg << "ragged row at line " << line_no << ": expected " << d + 1
                << " cells, got " << cells.size();
            throw ParseError(msg.str());
        }
        for (std::size_t j = 0; j < d; ++j)
            features.push_back(parse_double(cells[j], line_no));
        targets.push_back(parse_double(cells[d], line_no));
    }
    if (targets.empty())
        throw InvalidInputError("CSV has a header but no data rows: " + path);
    return Dataset(std::move(features), std::move(targets), d);
}

void write_csv(const Dataset& data, const std::string& path) {
    std::ostringstream out;
    for (std::size_t j = 0; j < data.dim(); ++j) out << 'x' << j + 1 << ',';
    out << "y\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (double v : data.row(i)) out << format_double(v) << ',';
        out << format_double(data.target(i)) << '\n';
    }
    atomic_write(path, out.str());
}

ScalingParams fit_scaling(const Dataset& data) {
    ScalingParams params;
    params.min_max.resize(data.dim());
    for (std::size_t j = 0; j < data.dim(); ++j)
        params.min_max[j] = {data.row(0)[j], data.row(0)[j]};
    for (std::size_t i = 1; i < data.size(); ++i) {
        const auto x = data.row(i);
        for (std::size_t j = 0; j < data.dim(); ++j) {
            params.min_max[j].first = std::min(params.min_max[j].first, x[j]);
            params.min_max[j].second = std::max(params.min_max[j].second, x[j]);
        }
    }
    return params;
}

Dataset apply_scaling(const Dataset& data, const ScalingParams& params) {
    if (params.dim() != data.dim())
        throw InvalidInputError("apply_scaling: dimension mismatch");
    Dataset out(data.size(), data.dim());
    for (std::size_t i = 0; i < data.size(); ++i) {
        params.apply(data.row(i), out.row(i));
        out.target(i) = data.target(i);
    }
    out.scaling = params;
    return out;
}

namespace {

constexpr int kSchemaVersion = 1;

void write_common(std::ostringstream& out, const std::vector<AffineModel>& planes,
                  const std::vector<std::vector<double>>& centroids,
                  double gamma, const std::optional<ScalingParams>& scaling) {
    const std::size_t d = planes.empty() ? 0 : planes[0].dim();
    out << "k " << planes.size() << "\n";
    out << "d " << d << "\n";
    out << "gamma " << format_double(gamma) << "\n";
    out << "scaled " << (scaling ? 1 : 0) << "\n";
    if (scaling)
        for (std::size_t j = 0; j < scaling->dim(); ++j)
            out << "scale " << j << ' ' << format_double(scaling->min_max[j].first)
                << ' ' << format_double(scaling->min_max[j].second) << "\n";
    for (std::size_t c = 0; c < planes.size(); ++c) {
        out << "plane " << c;
        for (double v : planes[c].w) out << ' ' << format_double(v);
        out << ' ' << format_double(planes[c].b) << "\n";
        out << "centroid " << c;
        for (double v : centroids[c]) out << ' ' << format_double(v);
        out << "\n";
    }
}

struct ModelReader {
    std::istringstream in;
    std::size_t line_no = 0;

    explicit ModelReader(std::string text) : in(std::move(text)) {}

    std::vector<std::string> next_tokens() {
        std::string line;
        while (std::getline(in, line)) {
            ++line_no;
            std::istringstream ls(line);
            std::vector<std::string> toks;
            std::string t;
            while (ls >> t) toks.push_back(t);
            if (!toks.empty()) return toks;
        }
        throw ParseError("model file truncated");
    }

    std::vector<std::string> expect(const std::string& key, std::size_t min_toks) {
        auto toks = next_tokens();
        if (toks[0] != key || toks.size() < min_toks) {
            std::ostringstream msg;
            msg << "model file: expected '" << key << "' at line " << line_no;
            throw ParseError(msg.str());
        }
        return toks;
    }

    double num(const std::string& tok) { return parse_double(tok, line_no); }

    std::size_t index(const std::string& tok) {
        const double v = num(tok);
        if (v < 0 || v != std::floor(v))
            throw ParseError("model file: bad index");
        return static_cast<std::size_t>(v);
    }
};

void read_common(ModelReader& r, std::vector<AffineModel>& planes,
                 std::vector<std::vector<double>>& centroids,
                 double& gamma, std::optional<ScalingParams>& scaling) {
    const std::size_t k = r.index(r.expect("k", 2)[1]);
    const std::size_t d = r.index(r.expect("d", 2)[1]);
    gamma = r.num(r.expect("gamma", 2)[1]);
    const std::size_t scaled = r.index(r.expect("scaled", 2)[1]);
    if (scaled) {
        ScalingParams params;
        params.min_max.resize(d);
        for (std::size_t j = 0; j < d; ++j) {
            auto toks = r.expect("scale", 4);
            const std::size_t idx = r.index(toks[1]);
            if (idx != j) throw ParseError("model file: scale entries out of order");
            params.min_max[j] = {r.num(toks[2]), r.num(toks[3])};
        }
        scaling = std::move(params);
    }
    planes.resize(k);
    centroids.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        auto ptoks = r.expect("plane", 2 + d + 1);
        if (r.index(ptoks[1]) != c || ptoks.size() != 3 + d)
            throw ParseError("model file: malformed plane entry");
        planes[c].w.resize(d);
        for (std::size_t j = 0; j < d; ++j) planes[c].w[j] = r.num(ptoks[2 + j]);
        planes[c].b = r.num(ptoks[2 + d]);
        auto ctoks = r.expect("centroid", 2 + d);
        if (r.index(ctoks[1]) != c || ctoks.size() != 2 + d)
            throw ParseError("model file: malformed centroid entry");
        centroids[c].resize(d);
        for (std::size_t j = 0; j < d; ++j) centroids[c][j] = r.num(ctoks[2 + j]);
    }
}

}  // namespace

void save_model(const PiecewiseModel& model, const std::string& path) {
    model.validate();
    std::ostringstream out;
    out << "kplane-model " << kSchemaVersion << "\n";
    out << "type piecewise\n";
    write_common(out, model.planes, model.centroids, model.gamma, model.scaling);
    atomic_write(path, out.str());
}

void save_model(const MixtureModel& model, const std::string& path) {
    model.validate();
    std::ostringstream out;
    out << "kplane-model " << kSchemaVersion << "\n";
    out << "type mixture\n";
    out << "epsilon " << format_double(model.epsilon) << "\n";
    for (std::size_t c = 0; c < model.k(); ++c)
        out << "alpha " << c << ' ' << format_double(model.alphas[c]) << "\n";
    write_common(out, model.planes, model.centroids, model.gamma, std::nullopt);
    atomic_write(path, out.str());
}

AnyModel load_any_model(const std::string& path) {
    ModelReader r(read_file(path));
    auto magic = r.expect("kplane-model", 2);
    if (r.index(magic[1]) != kSchemaVersion)
        throw ParseError("model file: unsupported schema version");
    auto type = r.expect("type", 2);
    if (type[1] == "piecewise") {
        PiecewiseModel model;
        read_common(r, model.planes, model.centroids, model.gamma, model.scaling);
        model.validate();
        return model;
    }
    if (type[1] == "mixture") {
        MixtureModel model;
        model.epsilon = r.num(r.expect("epsilon", 2)[1]);
        std::vector<double> alphas;
        for (;;) {
            auto toks = r.next_tokens();
            if (toks[0] == "alpha") {
                if (toks.size() != 3 || r.index(toks[1]) != alphas.size())
                    throw ParseError("model file: malformed alpha entry");
                alphas.push_back(r.num(toks[2]));
                continue;
            }
            if (toks[0] == "k" && toks.size() == 2) {
                // rewind-free: read the remainder knowing k already consumed
                const std::size_t k = r.index(toks[1]);
                if (k != alphas.size())
                    throw ParseError("model file: alpha count does not match k");
                const std::size_t d = r.index(r.expect("d", 2)[1]);
                model.gamma = r.num(r.expect("gamma", 2)[1]);
                if (r.index(r.expect("scaled", 2)[1]) != 0)
                    throw ParseError("model file: mixture models carry no scaling");
                model.planes.resize(k);
                model.centroids.resize(k);
                for (std::size_t c = 0; c < k; ++c) {
                    auto ptoks = r.expect("plane", 3 + d);
                    if (r.index(ptoks[1]) != c || ptoks.size() != 3 + d)
                        throw ParseError("model file: malformed plane entry");
                    model.planes[c].w.resize(d);
                    for (std::size_t j = 0; j < d; ++j)
                        model.planes[c].w[j] = r.num(ptoks[2 + j]);
                    model.planes[c].b = r.num(ptoks[2 + d]);
                    auto ctoks = r.expect("centroid", 2 + d);
                    if (r.index(ctoks[1]) != c || ctoks.size() != 2 + d)
                        throw ParseError("model file: malformed centroid entry");
                    model.centroids[c].resize(d);
                    for (std::size_t j = 0; j < d; ++j)
                        model.centroids[c][j] = r.num(ctoks[2 + j]);
                }
                model.alphas = std::move(alphas);
                model.validate();
                return model;
            }
            throw ParseError("model file: unexpected entry '" + toks[0] + "'");
        }
    }
    throw ParseError("model file: unknown type '" + type[1] + "'");
}

PiecewiseModel load_model(const std::string& path) {
    AnyModel any = load_any_model(path);
    if (auto* pw = std::get_if<PiecewiseModel>(&any)) return std::move(*pw);
    throw InvalidInputError("model file holds a mixture, expected a piecewise model");
}

UciDataset uci_dataset_from_name(const std::string& name) {
    if (name == "housing") return UciDataset::housing;
    if (name == "abalone") return UciDataset::abalone;
    if (name == "auto-mpg" || name == "auto_mpg") return UciDataset::auto_mpg;
    if (name == "computer-activity" || name == "computer_activity" || name == "cpu")
        return UciDataset::computer_activity;
    throw InvalidInputError("unknown UCI dataset name: " + name);
}

namespace {

std::vector<std::string> tokenize_any(const std::string& line) {
    std::string normalized = line;
    for (char& ch : normalized)
        if (ch == ',' || ch == '\t' || ch == '\r') ch = ' ';
    std::istringstream ls(normalized);
    std::vector<std::string> toks;
    std::string t;
    while (ls >> t) toks.push_back(t);
    return toks;
}

}  // namespace

Dataset load_uci(UciDataset which, const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open file: " + path);

    std::vector<double> features;
    std::vector<double> targets;
    std::size_t d = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto toks = tokenize_any(line);
        if (toks.empty()) continue;
        switch (which) {
            case UciDataset::housing: {
                // 13 numeric features, MEDV last
                if (toks.size() != 14)
                    throw ParseError("housing: expected 14 columns at line " +
                                     std::to_string(line_no));
                d = 13;
                for (std::size_t j = 0; j < 13; ++j)
                    features.push_back(parse_double(toks[j], line_no));
                targets.push_back(parse_double(toks[13], line_no));
                break;
            }
            case UciDataset::abalone: {
                // sex mapped ordinally {M,F,I} -> {1,0,-1}; rings last
                if (toks.size() != 9)
                    throw ParseError("abalone: expected 9 columns at line " +
                                     std::to_string(line_no));
                d = 8;
                double sex;
                if (toks[0] == "M") sex = 1.0;
                else if (toks[0] == "F") sex = 0.0;
                else if (toks[0] == "I") sex = -1.0;
                else throw ParseError("abalone: bad sex code at line " +
                                      std::to_string(line_no));
                features.push_back(sex);
                for (std::size_t j = 1; j < 8; ++j)
                    features.push_back(parse_double(toks[j], line_no));
                targets.push_back(parse_double(toks[8], line_no));
                break;
            }
            case UciDataset::auto_mpg: {
                // mpg first (target), 7 numeric features, car name ignored;
                // rows with missing horsepower ('?') are dropped
                if (toks.size() < 8)
                    throw ParseError("auto-mpg: expected at least 8 columns at line " +
                                     std::to_string(line_no));
                d = 7;
                if (toks[3] == "?") continue;
                targets.push_back(parse_double(toks[0], line_no));
                for (std::size_t j = 1; j < 8; ++j)
                    features.push_back(parse_double(toks[j], line_no));
                break;
            }
            case UciDataset::computer_activity: {
                // cpu_small layout: 12 features, usr last
                if (toks.size() != 13)
                    throw ParseError("computer-activity: expected 13 columns at line " +
                                     std::to_string(line_no));
                d = 12;
                for (std::size_t j = 0; j < 12; ++j)
                    features.push_back(parse_double(toks[j], line_no));
                targets.push_back(parse_double(toks[12], line_no));
                break;
            }
        }
    }
    if (targets.empty())
        throw InvalidInputError("no usable rows in " + path);
    return Dataset(std::move(features), std::move(targets), d);
}

}  // namespace kplane
