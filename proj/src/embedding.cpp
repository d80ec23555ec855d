#include "tripalign/embedding.hpp"

#include <fstream>

#include "tripalign/csv.hpp"
#include "tripalign/error.hpp"

namespace tripalign {

void save_embedding(const EmbeddingMatrix& emb, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("FileNotFound", "cannot write " + path);
    out << "concept";
    for (int j = 0; j < emb.d(); ++j) out << ",dim" << j;
    out << '\n';
    for (int i = 0; i < emb.n(); ++i) {
        if (i < static_cast<int>(emb.names.size()))
            out << csv::quote(emb.names[static_cast<std::size_t>(i)]);
        else
            out << "item" << i;
        for (int j = 0; j < emb.d(); ++j) out << ',' << csv::format_double(emb.values(i, j));
        out << '\n';
    }
}

EmbeddingMatrix load_embedding(const std::string& path) {
    const csv::Table t = csv::read_file(path);
    if (t.header.empty() || t.header[0] != "concept")
        fail("MalformedCsv", path + ": first column must be 'concept'");
    const int d = static_cast<int>(t.header.size()) - 1;
    if (d < 1) fail("MalformedCsv", path + ": no dimension columns");
    EmbeddingMatrix emb;
    emb.values.resize(static_cast<Eigen::Index>(t.rows.size()), d);
    emb.names.reserve(t.rows.size());
    bool all_nonnegative = true;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        emb.names.push_back(t.rows[i][0]);
        for (int j = 0; j < d; ++j) {
            double v = 0.0;
            try {
                v = std::stod(t.rows[i][static_cast<std::size_t>(j) + 1]);
            } catch (const std::exception&) {
                fail("MalformedCsv", path + ": bad number '" + t.rows[i][static_cast<std::size_t>(j) + 1] + "'");
            }
            if (!std::isfinite(v)) fail("MalformedCsv", path + ": non-finite entry");
            if (v < 0.0) all_nonnegative = false;
            emb.values(static_cast<Eigen::Index>(i), j) = v;
        }
    }
    emb.nonnegative = all_nonnegative;
    return emb;
}

EmbeddingMatrix subset_by_names(const EmbeddingMatrix& emb, const ConceptSet& set) {
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < emb.names.size(); ++i)
        index[emb.names[i]] = static_cast<int>(i);
    EmbeddingMatrix out;
    out.nonnegative = emb.nonnegative;
    out.values.resize(set.size(), emb.d());
    out.names.reserve(static_cast<std::size_t>(set.size()));
    for (const auto& c : set.concepts()) {
        auto it = index.find(c.name);
        if (it == index.end()) fail("MissingConcept", "embedding has no row for '" + c.name + "'");
        out.values.row(c.id) = emb.values.row(it->second);
        out.names.push_back(c.name);
    }
    return out;
}

}  // namespace tripalign
