#pragma once

#include <span>
#include <vector>

#include "wl/clutter.hpp"

namespace wl {

/// k-nearest-neighbor classifier over stored labeled signals (L2 distance,
/// majority vote, ties toward the smallest class label).
struct KnnModel {
  int k = 5;
  int length = kSignalLength;
  std::vector<float> signals;  ///< [n, length] flattened
  std::vector<int> labels;
};

/// Builds the model from the labeled train samples of the dataset.
/// k must be odd, positive, and at most the labeled train count.
KnnModel knn_fit(const Dataset& dataset, int k = 5);

int knn_classify(const KnnModel& model, std::span<const float> x);

/// Test-set accuracy of the fitted model.
double knn_evaluate(const KnnModel& model, const Dataset& dataset);

struct LogRegConfig {
  double lr = 0.02;
  int iterations = 300;
  double l2 = 1e-4;
};

/// Multinomial logistic regression [K, length] trained by full-batch
/// gradient descent on cross-entropy with L2 penalty, from zero weights.
struct LogRegModel {
  int num_classes = kNumClasses;
  int length = kSignalLength;
  std::vector<double> w;  ///< [num_classes, length]
  std::vector<double> b;  ///< [num_classes]
  std::vector<double> loss_trace;  ///< per-iteration training loss
};

/// Trains on the labeled train samples; requires every class present.
LogRegModel logreg_train(const Dataset& dataset, const LogRegConfig& config);

/// Mean cross-entropy plus (l2/2)*||w||^2 of the model on the given rows.
double logreg_loss(const LogRegModel& model, std::span<const float> signals,
                   std::span<const int> labels, double l2);

/// Class probabilities for one signal (softmax of the linear logits).
std::vector<double> logreg_probabilities(const LogRegModel& model,
                                         std::span<const float> x);

int logreg_predict(const LogRegModel& model, std::span<const float> x);

/// Test-set accuracy of the fitted model.
double logreg_evaluate(const LogRegModel& model, const Dataset& dataset);

struct SelfTrainConfig {
  LogRegConfig base;
  double threshold = 0.95;  ///< minimum confidence to adopt a pseudo-label
  int max_rounds = 10;
};

/// Iterative pseudo-labeling on top of logistic regression: train on the
/// labeled pool, adopt unlabeled samples predicted above the confidence
/// threshold, retrain, and repeat until no sample moves (or max_rounds).
/// Returns test-set accuracy.
double self_training_baseline(const Dataset& dataset,
                              const SelfTrainConfig& config);

}  // namespace wl
