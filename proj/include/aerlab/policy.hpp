#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "aerlab/errors.hpp"
#include "aerlab/rng.hpp"

namespace aerlab {

// Token alphabet. The last id is reserved as EOS.
struct Vocab {
    int size = 16;

    int eos() const { return size - 1; }
    // Window slots holding "no token yet" use this id (one past the vocab).
    int pad() const { return size; }
};

// Question encoding: a short sequence of symbol ids from an alphabet that is
// disjoint from the response vocabulary (task tag + payload symbols + PAD).
using QuestionEncoding = std::vector<int>;

// Network dimensions. Input = concatenated per-slot question-symbol
// embeddings (PAD-padded to question_slots) followed by a one-hot window of
// the last `window` response tokens.
struct PolicyShape {
    int vocab = 16;           // |V|, includes EOS
    int window = 4;           // h
    int embed_dim = 8;        // d
    int hidden_dim = 32;      // d_h
    int question_symbols = 19; // symbol alphabet size, includes PAD (last id)
    int question_slots = 9;   // max encoding length

    int question_pad() const { return question_symbols - 1; }
    int input_dim() const { return question_slots * embed_dim + window * (vocab + 1); }
    int param_count() const;

    // Flat parameter layout offsets.
    int emb_offset() const { return 0; }
    int w1_offset() const { return question_symbols * embed_dim; }
    int b1_offset() const { return w1_offset() + hidden_dim * input_dim(); }
    int w2_offset() const { return b1_offset() + hidden_dim; }
    int b2_offset() const { return w2_offset() + vocab * hidden_dim; }

    void validate() const;
    bool operator==(const PolicyShape&) const = default;
};

// Learnable parameters as one flat vector (gradients use the same layout).
struct PolicyParams {
    PolicyShape shape;
    std::vector<double> values;

    explicit PolicyParams(PolicyShape s) : shape(s), values(s.param_count(), 0.0) { s.validate(); }

    void randomize(double scale, RngStream& rng) {
        for (double& v : values) {
            v = rng.normal(0.0, scale);
        }
    }

    std::span<const double> embedding_row(int symbol) const {
        return {values.data() + shape.emb_offset() + symbol * shape.embed_dim,
                static_cast<std::size_t>(shape.embed_dim)};
    }
};

// Full next-token distribution (softmax of logits, temperature already applied).
struct TokenDistribution {
    std::vector<double> logits;
    std::vector<double> probs;
};

// One sampled response: tokens (ending at EOS or truncated at L_max) plus
// per-position log-prob and token entropy under the generating policy.
struct Response {
    std::vector<int> tokens;
    std::vector<double> logprobs;
    std::vector<double> entropies;

    int length() const { return static_cast<int>(tokens.size()); }
};

// Cached forward pass at one position, enough to backpropagate any dlogits.
struct StepTrace {
    std::vector<double> input;   // x
    std::vector<double> hidden;  // z = tanh(W1 x + b1)
    TokenDistribution dist;
};

// -- forward / sampling ------------------------------------------------------

// Next-token distribution for (question, prefix window). `window_tokens` must
// hold exactly shape.window ids (vocab ids or vocab.pad()).
TokenDistribution forward(const PolicyParams& params, const QuestionEncoding& question,
                          std::span<const int> window_tokens, double temperature = 1.0);

// Forward pass that keeps the activations needed for backprop.
StepTrace forward_trace(const PolicyParams& params, const QuestionEncoding& question,
                        std::span<const int> window_tokens, double temperature = 1.0);

// The last `window` tokens of `tokens[0..position)`, left-padded with pad_id.
std::vector<int> window_at(std::span<const int> tokens, int position, int window, int pad_id);

// Sample a response token-by-token; stops at EOS or max_len.
Response sample_response(const PolicyParams& params, const QuestionEncoding& question,
                         RngStream& rng, int max_len, double temperature = 1.0);

// -- entropy -----------------------------------------------------------------

// H = -sum_o p(o) ln p(o), in nats. Always in [0, ln |V|].
double token_entropy(const TokenDistribution& dist);

// Mean token entropy over the response's positions, recomputed from `params`
// at the sampled prefixes.
double sequence_entropy(const PolicyParams& params, const QuestionEncoding& question,
                        const Response& response);

// KL(p || q) over the full vocabulary.
double distribution_kl(const TokenDistribution& p, const TokenDistribution& q);

// -- gradients ---------------------------------------------------------------

// Accumulate d(dlogits . logits)/dtheta into grad (grad has param_count
// entries). The window context is already baked into the trace input.
void backprop_logits(const PolicyParams& params, const QuestionEncoding& question,
                     const StepTrace& trace, std::span<const double> dlogits,
                     std::span<double> grad);

// Exact gradient of sum_l ln pi(o_l | q, o_<l) with respect to params.
std::vector<double> grad_logprob(const PolicyParams& params, const QuestionEncoding& question,
                                 const Response& response);

// Exact gradient of sequence_entropy with respect to params.
std::vector<double> grad_entropy(const PolicyParams& params, const QuestionEncoding& question,
                                 const Response& response);

// dH/dlogits for a single distribution: -p_j (ln p_j + H). Zero at uniform.
void entropy_dlogits(const TokenDistribution& dist, double scale, std::span<double> out);

// -- checkpoint --------------------------------------------------------------

// Parameter file: magic "AERPOL1", then window/embed_dim/hidden_dim/vocab as
// little-endian int32, then the flat parameter array as little-endian f64.
void write_params(std::ostream& out, const PolicyParams& params);
PolicyParams read_params(std::istream& in, const PolicyShape& expected);

} // namespace aerlab
