#pragma once

#include <string>

#include <Eigen/Dense>

#include "tripalign/embedding.hpp"

namespace tripalign {

/// Pairwise dissimilarity matrix: symmetric, zero diagonal.
struct RSM {
    Eigen::MatrixXd values;
    std::string metric_tag;
};

struct AlignmentReport {
    std::string model_id;
    double procrustes_r2 = 0.0;   // <= 1
    double cka = 0.0;             // in [0, 1]
    double rsa_spearman = 0.0;    // in [-1, 1]
    int d = 0;                    // dimensionality used for the comparison
    bool padded = false;          // true if one side was zero-padded to match

    std::string to_csv_row() const;
    static std::string csv_header();
};

/// Variance of the reference explained by the model embedding after the best
/// orthogonal map (reflections allowed), global scale, and translation:
/// R^2 = 1 - residual SSE / reference SSE. Dimension mismatches are
/// reconciled by zero-padding the narrower matrix.
double procrustes_r2(const EmbeddingMatrix& model_emb, const EmbeddingMatrix& reference_emb);

/// Linear centered kernel alignment: |X'Y|_F^2 / (|X'X|_F |Y'Y|_F) on
/// column-centered inputs. Invariant to rotation and isotropic scaling.
double linear_cka(const EmbeddingMatrix& x, const EmbeddingMatrix& y);

RSM rsm(const EmbeddingMatrix& emb);

/// Spearman rank correlation between the strict upper triangles of the two
/// embeddings' Euclidean RSMs.
double rsa_correlation(const EmbeddingMatrix& x, const EmbeddingMatrix& y);

/// Smallest d whose leading principal components explain at least
/// `threshold` of the variance of the column-centered matrix.
int select_dimensionality(const EmbeddingMatrix& emb, double threshold);

/// All three metrics plus bookkeeping for one model-vs-reference comparison.
AlignmentReport align(const EmbeddingMatrix& model_emb, const EmbeddingMatrix& reference_emb,
                      const std::string& model_id);

}  // namespace tripalign
