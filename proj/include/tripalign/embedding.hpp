#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tripalign/registry.hpp"

namespace tripalign {

/// n x d item coordinates. Row order follows the concept set the rows were
/// built from; `names` may be empty for synthetic data.
struct EmbeddingMatrix {
    Eigen::MatrixXd values;
    std::vector<std::string> names;
    bool nonnegative = false;

    int n() const { return static_cast<int>(values.rows()); }
    int d() const { return static_cast<int>(values.cols()); }
};

/// CSV with header `concept,dim0..dim{d-1}`, rows in concept order.
void save_embedding(const EmbeddingMatrix& emb, const std::string& path);
EmbeddingMatrix load_embedding(const std::string& path);

/// Rows of `emb` matching `set`'s names, in set order. Missing names error.
EmbeddingMatrix subset_by_names(const EmbeddingMatrix& emb, const ConceptSet& set);

}  // namespace tripalign
