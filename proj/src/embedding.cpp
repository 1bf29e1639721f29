#include "neuroembed/embedding.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "neuroembed/spectral.hpp"

namespace neuroembed {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, std::size_t line) {
    double v = 0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e) throw ParseError("not a number: '" + s + "'", line);
    return v;
}

} // namespace

void write_embeddings_csv(const std::string& path, const EmbeddingTable& table,
                          const std::optional<std::vector<int>>& labels) {
    if (static_cast<std::size_t>(table.z.rows()) != table.ids.size()) {
        throw ArgumentError("embedding table: id count does not match rows");
    }
    if (labels && labels->size() != table.ids.size()) {
        throw ArgumentError("embedding table: label count does not match rows");
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "id";
    for (Eigen::Index j = 0; j < table.z.cols(); ++j) out << ",z" << j;
    if (labels) out << ",label";
    out << '\n';
    char buf[32];
    for (std::size_t i = 0; i < table.ids.size(); ++i) {
        out << table.ids[i];
        for (Eigen::Index j = 0; j < table.z.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", table.z(static_cast<Eigen::Index>(i), j));
            out << ',' << buf;
        }
        if (labels) out << ',' << (*labels)[i];
        out << '\n';
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

LabeledEmbeddings read_embeddings_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(in, line)) throw EmptyInputError(path + ": empty embeddings file");
    const auto header = split_csv(line);
    if (header.empty() || header[0] != "id") throw ParseError(path + ": header must start with 'id'", 1);
    const bool has_label = header.back() == "label";
    const std::size_t dims = header.size() - 1 - (has_label ? 1 : 0);

    LabeledEmbeddings out;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != header.size()) {
            throw ParseError(path + ": expected " + std::to_string(header.size()) + " fields", lineno);
        }
        out.table.ids.push_back(f[0]);
        std::vector<double> row(dims);
        for (std::size_t j = 0; j < dims; ++j) row[j] = parse_double(f[1 + j], lineno);
        rows.push_back(std::move(row));
        if (has_label) labels.push_back(static_cast<int>(parse_double(f.back(), lineno)));
    }
    out.table.z.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dims));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < dims; ++j) {
            out.table.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    if (has_label) out.labels = std::move(labels);
    return out;
}

MatD pca_2d(const MatD& x) {
    if (x.rows() < 2) throw ArgumentError("pca_2d: need at least 2 rows");
    const MatD centered = x.rowwise() - x.colwise().mean();
    const MatD cov = (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
    const SymmetricEigen eig = eig_sym(0.5 * (cov + cov.transpose()));
    const Eigen::Index d = x.cols();
    MatD axes(d, 2);
    for (int a = 0; a < 2; ++a) {
        const Eigen::Index col = d - 1 - a;
        if (col < 0) {
            axes.col(a).setZero();
            continue;
        }
        VecD v = eig.vectors.col(col);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        axes.col(a) = v;
    }
    return centered * axes;
}

} // namespace neuroembed
