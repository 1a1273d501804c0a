#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "morfo/corpus.hpp"
#include "morfo/features.hpp"
#include "morfo/rng.hpp"
#include "morfo/tensor.hpp"
#include "morfo/vectors.hpp"

namespace morfo {

struct ModelConfig {
  std::size_t width = 128;
  std::size_t depth = 4;
  std::size_t window = 1;       // context radius per conv layer
  std::size_t attn_window = 4;
  std::size_t n_tags = 1;
  double dropout_start = 0.6;
  double dropout_end = 0.4;
  std::size_t batch_start = 4;
  std::size_t batch_max = 32;
  double batch_factor = 1.001;
  std::size_t epochs = 30;
  double learning_rate = 0.001;
  std::uint64_t seed = 0;
  // Embedding geometry.
  std::size_t norm_rows = 5000;
  std::size_t norm_dim = 64;
  std::size_t affix_rows = 1000;  // prefix / suffix / shape tables
  std::size_t affix_dim = 16;
  std::size_t pos_rows = 100;
  std::size_t pos_dim = 16;
  bool use_pos = false;

  void validate() const;
};

// Adam moments aligned with the parameter list order.
struct AdamState {
  std::vector<Tensor> m, v;
  std::uint64_t step = 0;
};

struct PipelineModel {
  ModelConfig config;
  EmbedLayer embed;
  std::vector<Tensor> conv_w;  // depth x (width*(2*window+1) x width)
  std::vector<Tensor> conv_b;  // depth x (1 x width)
  Tensor attn_query;           // 1 x width
  Tensor out_w;                // width x n_tags
  Tensor out_b;                // 1 x n_tags
  std::vector<std::string> tag_inventory;
  AdamState adam;
  // Carried with the model so tag/eval need no side files.
  VectorTable pretrained;
  std::string mode;  // supertag | upos | ner
  std::vector<std::string> train_vocab;

  std::vector<Tensor*> params();
  std::vector<const Tensor*> params() const;
  bool finite() const;
};

// Builds a model with seeded Glorot-uniform weights and zero biases.
PipelineModel init_model(const ModelConfig& config,
                         std::vector<std::string> tag_inventory,
                         VectorTable pretrained, const std::string& mode);

// One training example: a sentence, gold tag indices, and the optional POS
// feature strings (one per token, used when config.use_pos is set).
struct TrainItem {
  Sentence sentence;
  std::vector<std::size_t> gold;
  std::vector<std::string> pos;
};

struct Gradients {
  std::vector<Tensor> g;
  void zero();
};

Gradients make_gradients(const PipelineModel& model);

// Residual conv encoder with inverted dropout. dropout == 0 disables masking.
Tensor encode(const Tensor& h, const PipelineModel& model, double dropout,
              Rng& rng);

// Residual local-window attention with a single learned query.
Tensor attend(const Tensor& h, const PipelineModel& model);

// Row-wise softmax over the output projection.
Tensor predict(const Tensor& h, const PipelineModel& model);

// Full forward pass for one sentence (embed -> encode -> attend -> predict)
// at dropout 0; used for inference.
Tensor forward_probs(const PipelineModel& model, const Sentence& sentence,
                     const std::vector<std::string>* pos = nullptr);

std::vector<std::size_t> predict_indices(
    const PipelineModel& model, const Sentence& sentence,
    const std::vector<std::string>* pos = nullptr);

// Mean token cross-entropy over the batch plus reverse-mode gradients.
// Gradient tensors are accumulated into `grads` (caller zeroes them).
double loss_and_gradients(const PipelineModel& model,
                          const std::vector<const TrainItem*>& batch,
                          double dropout, Rng& rng, Gradients& grads);

// Forward-only batch loss at dropout 0; the finite-difference side of the
// gradient check.
double batch_loss(const PipelineModel& model,
                  const std::vector<const TrainItem*>& batch);

// Adam (beta1 0.9, beta2 0.999, eps 1e-8) with global-norm clipping at 10.
void optimizer_step(PipelineModel& model, const Gradients& grads, double lr);

std::size_t batch_schedule(std::size_t step);
std::size_t batch_schedule(std::size_t step, const ModelConfig& config);
double dropout_schedule(std::size_t epoch, std::size_t total_epochs);
double dropout_schedule(std::size_t epoch, std::size_t total_epochs,
                        const ModelConfig& config);

void save_model(const PipelineModel& model, const std::string& path);
PipelineModel load_model(const std::string& path);

// Central finite differences over every parameter of a small random model;
// returns the max relative error against the analytic gradients.
double gradient_check(const ModelConfig& config, std::uint64_t seed);

// Pieces of the gradient check, exposed so tests can compare against
// independently perturbed gradients.
std::vector<Tensor> numeric_gradients(PipelineModel& model,
                                      const std::vector<const TrainItem*>& batch,
                                      double eps);
double max_relative_error(const std::vector<Tensor>& a,
                          const std::vector<Tensor>& b);
PipelineModel make_gradcheck_model(const ModelConfig& config,
                                   std::uint64_t seed,
                                   std::vector<TrainItem>& batch_out);

// Shared epoch loop: compounding batch sizes, decaying dropout, per-epoch
// reshuffle, best-dev-accuracy model selection.
struct TrainLog {
  std::vector<double> dev_accuracy;  // per epoch
  std::size_t best_epoch = 0;
};

PipelineModel train_pipeline(const std::vector<TrainItem>& train,
                             const std::vector<TrainItem>& dev,
                             const ModelConfig& config,
                             VectorTable pretrained,
                             std::vector<std::string> tag_inventory,
                             const std::string& mode,
                             std::vector<std::string> train_vocab,
                             TrainLog* log = nullptr, bool verbose = false);

}  // namespace morfo
