#pragma once

// Per-agent actor. Own/neighbour encoders feed a one-query attention over
// the neighbour set; each attention weight is passed, together with the
// neighbour's previous semantic representation (SR), through a scalar
// recurrent encoder whose squashed output is broadcast back as this
// agent's SR. A recurrent utility head maps everything to action values.
//
// All tensors are batches with one column per sample, so the same code
// serves single-step execution (B = 1) and episode-batch training.

#include "gaxnet/env.hpp"
#include "gaxnet/nn/ops.hpp"
#include "gaxnet/nn/param_store.hpp"
#include "gaxnet/types.hpp"

#include <string>
#include <vector>

namespace gaxnet::policy {

using nn::Rng;

enum class ExchangeMode {
  kSemantic,  // broadcast w-bar, the encoded SR
  kRaw,       // broadcast the raw attention weight w
  kNone,      // inbox always empty (ablation)
};

struct ActorConfig {
  int n_agents = 4;
  int obs_dim = 22;
  int other_dim = 9;
  int embed_dim = 64;      // J1
  int attention_dim = 32;  // J2
  int head_hidden = 64;
  int n_actions = env::kNumActions;
  bool attention = true;            // false: baseline head over h_own only
  bool normalize_attention = true;  // softmax over neighbours

  int neighbors() const { return n_agents - 1; }
  int head_input_dim() const {
    return attention ? embed_dim + neighbors() * (1 + attention_dim) : embed_dim;
  }
  void validate() const;
};

/// Per-agent recurrent state carried across slots at execution time.
struct ActorState {
  Matrix agent_hidden;  // head_hidden x B
  Matrix pair_hidden;   // (N-1) x B, one scalar SR-cell state per neighbour
  int slot = 0;

  static ActorState zeros(const ActorConfig& cfg, Index batch);
};

/// Actor inputs for one slot, batched.
struct ActorInput {
  Matrix own;                 // obs_dim x B  (flattened observation)
  std::vector<Matrix> other;  // N-1 entries, other_dim x B each
  Matrix inbox;               // (N-1) x B, already gated (zero when not observable)
};

/// Splits observations into the actor's input layout. `observable` rows
/// receive the e^{n,m} flags.
ActorInput make_input(const ActorConfig& cfg, const std::vector<const env::Observation*>& batch);
Matrix observable_mask(const ActorConfig& cfg, const ActorInput& in);

/// Resolves the SR inbox: zero at slot 0 and for unobservable neighbours.
Matrix gate_inbox(const Matrix& raw_inbox, const Matrix& observable, int slot);

struct ActorOutput {
  Matrix q;          // n_actions x B
  Matrix attention;  // (N-1) x B, w_{n,m}
  Matrix sr;         // (N-1) x B, w-bar_{n,m}
  Matrix agent_hidden;
  Matrix pair_hidden;
};

struct EncodeCache {
  Matrix own;
  std::vector<Matrix> other;
};
struct AttentionCache {
  nn::ScaledDotCache<double> dot;
  Matrix h_own;
  std::vector<Matrix> h_other;
};
struct SrCache {
  nn::GruCache<double> cell;
  Matrix hidden;  // 1 x (N-1)B after the cell
  Matrix sr;      // 1 x (N-1)B
};
struct UtilityCache {
  Matrix input, pre, act;
  nn::GruCache<double> cell;
  Matrix hidden;
};
struct ActorCache {
  EncodeCache encode;
  AttentionCache attention;
  SrCache sr;
  UtilityCache utility;
  Matrix attention_weights;  // (N-1) x B
  std::vector<Matrix> values;
  Matrix h_own;
};

/// Upstream gradients arriving at one actor step.
struct ActorUpstream {
  Matrix dq;             // n_actions x B
  Matrix dsr;            // (N-1) x B, from neighbours' inboxes next slot
  Matrix dattention;     // (N-1) x B, same, when raw weights are exchanged
  Matrix dagent_hidden;  // from the next slot
  Matrix dpair_hidden;
};

struct ActorInputGrad {
  Matrix down;
  std::vector<Matrix> dother;
  Matrix dinbox;
  Matrix dagent_hidden;
  Matrix dpair_hidden;
};

class Actor {
 public:
  Actor(const ActorConfig& cfg, const std::string& prefix, Rng& rng);
  Actor(const Actor& other);
  Actor& operator=(const Actor& other);
  Actor(Actor&& other);
  Actor& operator=(Actor&& other);

  struct Encoded {
    Matrix h_own;                // J1 x B
    std::vector<Matrix> h_other; // N-1 entries of J1 x B
  };
  struct Attended {
    Matrix weights;              // (N-1) x B
    std::vector<Matrix> values;  // N-1 entries of J2 x B
    Matrix mixed;                // J2 x B
  };
  struct SrOutput {
    Matrix sr;      // (N-1) x B
    Matrix hidden;  // (N-1) x B
  };
  struct Utility {
    Matrix q;
    Matrix hidden;
  };

  Encoded encode(const ActorInput& in, EncodeCache* cache = nullptr) const;
  Attended attention_graph(const Encoded& enc, AttentionCache* cache = nullptr) const;
  /// One SR-cell step per neighbour: input (w_now, sr_in), scalar hidden.
  SrOutput sr_encode(const Matrix& w_now, const Matrix& sr_in, const Matrix& pair_hidden,
                       SrCache* cache = nullptr) const;
  Utility utility(const Matrix& h_own, const Matrix& sr, const Matrix& weights, const std::vector<Matrix>& values,
                  const Matrix& agent_hidden, UtilityCache* cache = nullptr) const;

  ActorOutput forward(const ActorInput& in, const Matrix& agent_hidden, const Matrix& pair_hidden,
                      ActorCache* cache = nullptr) const;
  ActorInputGrad backward(const ActorCache& cache, const ActorUpstream& up);

  struct Decision {
    int action = 0;
    std::vector<double> outgoing;   // message per neighbour (per exchange mode)
    std::vector<double> attention;  // w_{n,m}
    std::vector<double> sr;         // w-bar_{n,m}
    std::vector<double> q;
  };
  /// Decentralized execution: reads only this agent's observation, its
  /// inbox and its own state. Ties in argmax go to the lowest index.
  Decision act(const env::Observation& obs, const std::vector<double>& inbox, ActorState& state, double epsilon,
               Rng& rng, ExchangeMode mode = ExchangeMode::kSemantic) const;

  const ActorConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }
  const std::string& prefix() const { return prefix_; }

 private:
  void bind();

  ActorConfig cfg_;
  std::string prefix_;
  nn::ParamStore store_;
  nn::AffineLayer<double> enc_own_, enc_other_, query_, key_, value_, sr_readout_, head_in_, head_out_;
  nn::GruLayer<double> sr_cell_, head_cell_;
};

int greedy_action(const Eigen::Ref<const Vector>& q);

}  // namespace gaxnet::policy
