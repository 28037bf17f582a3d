#include "aerlab/policy.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>

namespace aerlab {

int PolicyShape::param_count() const {
    return question_symbols * embed_dim          // embedding table
           + hidden_dim * input_dim() + hidden_dim // W1, b1
           + vocab * hidden_dim + vocab;           // W2, b2
}

void PolicyShape::validate() const {
    if (vocab < 2 || window < 1 || embed_dim < 1 || hidden_dim < 1 ||
        question_symbols < 2 || question_slots < 1) {
        throw config_error("PolicyShape: dimensions must be positive (vocab >= 2)");
    }
}

namespace {

void build_input(const PolicyParams& params, const QuestionEncoding& question,
                 std::span<const int> window_tokens, std::vector<double>& x) {
    const PolicyShape& s = params.shape;
    if (static_cast<int>(question.size()) > s.question_slots) {
        throw config_error("question encoding longer than question_slots");
    }
    if (static_cast<int>(window_tokens.size()) != s.window) {
        throw config_error("window size mismatch");
    }
    x.assign(s.input_dim(), 0.0);

    for (int slot = 0; slot < s.question_slots; ++slot) {
        const int sym = slot < static_cast<int>(question.size()) ? question[slot]
                                                                 : s.question_pad();
        if (sym < 0 || sym >= s.question_symbols) {
            throw config_error("question symbol out of range");
        }
        const auto row = params.embedding_row(sym);
        std::copy(row.begin(), row.end(), x.begin() + slot * s.embed_dim);
    }

    const int window_base = s.question_slots * s.embed_dim;
    const int slot_dim = s.vocab + 1;
    for (int w = 0; w < s.window; ++w) {
        const int tok = window_tokens[w];
        if (tok < 0 || tok > s.vocab) {
            throw config_error("window token out of range");
        }
        x[window_base + w * slot_dim + tok] = 1.0;
    }
}

void softmax_into(const std::vector<double>& logits, std::vector<double>& probs) {
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    probs.resize(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - max_logit);
        sum += probs[i];
    }
    const double inv = 1.0 / sum;
    for (double& p : probs) {
        p *= inv;
    }
}

} // namespace

StepTrace forward_trace(const PolicyParams& params, const QuestionEncoding& question,
                        std::span<const int> window_tokens, double temperature) {
    const PolicyShape& s = params.shape;
    if (temperature <= 0.0) {
        throw config_error("temperature must be positive");
    }

    StepTrace trace;
    build_input(params, question, window_tokens, trace.input);

    const double* w1 = params.values.data() + s.w1_offset();
    const double* b1 = params.values.data() + s.b1_offset();
    const double* w2 = params.values.data() + s.w2_offset();
    const double* b2 = params.values.data() + s.b2_offset();
    const int in = s.input_dim();

    trace.hidden.resize(s.hidden_dim);
    for (int h = 0; h < s.hidden_dim; ++h) {
        double a = b1[h];
        const double* row = w1 + h * in;
        for (int i = 0; i < in; ++i) {
            a += row[i] * trace.input[i];
        }
        trace.hidden[h] = std::tanh(a);
    }

    trace.dist.logits.resize(s.vocab);
    for (int o = 0; o < s.vocab; ++o) {
        double a = b2[o];
        const double* row = w2 + o * s.hidden_dim;
        for (int h = 0; h < s.hidden_dim; ++h) {
            a += row[h] * trace.hidden[h];
        }
        trace.dist.logits[o] = a / temperature;
    }
    softmax_into(trace.dist.logits, trace.dist.probs);
    return trace;
}

TokenDistribution forward(const PolicyParams& params, const QuestionEncoding& question,
                          std::span<const int> window_tokens, double temperature) {
    return forward_trace(params, question, window_tokens, temperature).dist;
}

std::vector<int> window_at(std::span<const int> tokens, int position, int window, int pad_id) {
    std::vector<int> out(window, pad_id);
    for (int w = 0; w < window; ++w) {
        const int idx = position - window + w;
        if (idx >= 0 && idx < static_cast<int>(tokens.size())) {
            out[w] = tokens[idx];
        }
    }
    return out;
}

Response sample_response(const PolicyParams& params, const QuestionEncoding& question,
                         RngStream& rng, int max_len, double temperature) {
    if (max_len < 1) {
        throw contract_error("sample_response: max_len must be >= 1");
    }
    const Vocab vocab{params.shape.vocab};
    Response response;
    for (int l = 0; l < max_len; ++l) {
        const auto window = window_at(response.tokens, l, params.shape.window, vocab.pad());
        const TokenDistribution dist = forward(params, question, window, temperature);
        const int tok = rng.categorical(dist.probs);
        response.tokens.push_back(tok);
        response.logprobs.push_back(std::log(dist.probs[tok]));
        response.entropies.push_back(token_entropy(dist));
        if (tok == vocab.eos()) {
            break;
        }
    }
    return response;
}

double token_entropy(const TokenDistribution& dist) {
    double h = 0.0;
    for (double p : dist.probs) {
        if (p > 0.0) {
            h -= p * std::log(p);
        }
    }
    assert(h >= -1e-12 && h <= std::log(static_cast<double>(dist.probs.size())) + 1e-9);
    return h;
}

double sequence_entropy(const PolicyParams& params, const QuestionEncoding& question,
                        const Response& response) {
    if (response.length() < 1) {
        throw contract_error("sequence_entropy: empty response");
    }
    const int pad = Vocab{params.shape.vocab}.pad();
    double sum = 0.0;
    for (int l = 0; l < response.length(); ++l) {
        const auto window = window_at(response.tokens, l, params.shape.window, pad);
        sum += token_entropy(forward(params, question, window));
    }
    return sum / response.length();
}

double distribution_kl(const TokenDistribution& p, const TokenDistribution& q) {
    double kl = 0.0;
    for (std::size_t i = 0; i < p.probs.size(); ++i) {
        if (p.probs[i] > 0.0) {
            kl += p.probs[i] * (std::log(p.probs[i]) - std::log(q.probs[i]));
        }
    }
    return kl;
}

void backprop_logits(const PolicyParams& params, const QuestionEncoding& question,
                     const StepTrace& trace, std::span<const double> dlogits,
                     std::span<double> grad) {
    const PolicyShape& s = params.shape;
    assert(static_cast<int>(dlogits.size()) == s.vocab);
    assert(static_cast<int>(grad.size()) == s.param_count());

    double* g_emb = grad.data() + s.emb_offset();
    double* g_w1 = grad.data() + s.w1_offset();
    double* g_b1 = grad.data() + s.b1_offset();
    double* g_w2 = grad.data() + s.w2_offset();
    double* g_b2 = grad.data() + s.b2_offset();
    const double* w1 = params.values.data() + s.w1_offset();
    const double* w2 = params.values.data() + s.w2_offset();
    const int in = s.input_dim();

    // Output layer.
    std::vector<double> dz(s.hidden_dim, 0.0);
    for (int o = 0; o < s.vocab; ++o) {
        const double g = dlogits[o];
        if (g == 0.0) {
            continue;
        }
        g_b2[o] += g;
        double* row = g_w2 + o * s.hidden_dim;
        const double* w_row = w2 + o * s.hidden_dim;
        for (int h = 0; h < s.hidden_dim; ++h) {
            row[h] += g * trace.hidden[h];
            dz[h] += g * w_row[h];
        }
    }

    // Hidden layer: a -> tanh(a).
    const int emb_span = s.question_slots * s.embed_dim;
    std::vector<double> dx_emb(emb_span, 0.0);
    for (int h = 0; h < s.hidden_dim; ++h) {
        const double da = dz[h] * (1.0 - trace.hidden[h] * trace.hidden[h]);
        if (da == 0.0) {
            continue;
        }
        g_b1[h] += da;
        double* row = g_w1 + h * in;
        for (int i = 0; i < in; ++i) {
            row[i] += da * trace.input[i];
        }
        const double* w_row = w1 + h * in;
        for (int i = 0; i < emb_span; ++i) {
            dx_emb[i] += da * w_row[i];
        }
    }

    // Embedding table.
    for (int slot = 0; slot < s.question_slots; ++slot) {
        const int sym = slot < static_cast<int>(question.size()) ? question[slot]
                                                                 : s.question_pad();
        double* row = g_emb + sym * s.embed_dim;
        const double* dxs = dx_emb.data() + slot * s.embed_dim;
        for (int d = 0; d < s.embed_dim; ++d) {
            row[d] += dxs[d];
        }
    }
}

void entropy_dlogits(const TokenDistribution& dist, double scale, std::span<double> out) {
    const double h = token_entropy(dist);
    for (std::size_t j = 0; j < dist.probs.size(); ++j) {
        out[j] = -scale * dist.probs[j] * (std::log(dist.probs[j]) + h);
    }
}

std::vector<double> grad_logprob(const PolicyParams& params, const QuestionEncoding& question,
                                 const Response& response) {
    const PolicyShape& s = params.shape;
    const int pad = Vocab{s.vocab}.pad();
    std::vector<double> grad(s.param_count(), 0.0);
    std::vector<double> dlogits(s.vocab);
    for (int l = 0; l < response.length(); ++l) {
        const auto window = window_at(response.tokens, l, s.window, pad);
        const StepTrace trace = forward_trace(params, question, window);
        // d ln p_y / d logit_j = delta_jy - p_j
        for (int j = 0; j < s.vocab; ++j) {
            dlogits[j] = -trace.dist.probs[j];
        }
        dlogits[response.tokens[l]] += 1.0;
        backprop_logits(params, question, trace, dlogits, grad);
    }
    return grad;
}

std::vector<double> grad_entropy(const PolicyParams& params, const QuestionEncoding& question,
                                 const Response& response) {
    const PolicyShape& s = params.shape;
    const int pad = Vocab{s.vocab}.pad();
    const double inv_len = 1.0 / response.length();
    std::vector<double> grad(s.param_count(), 0.0);
    std::vector<double> dlogits(s.vocab);
    for (int l = 0; l < response.length(); ++l) {
        const auto window = window_at(response.tokens, l, s.window, pad);
        const StepTrace trace = forward_trace(params, question, window);
        entropy_dlogits(trace.dist, inv_len, dlogits);
        backprop_logits(params, question, trace, dlogits, grad);
    }
    return grad;
}

// -- checkpoint --------------------------------------------------------------

namespace {

constexpr char kParamsMagic[] = "AERPOL1";

void write_i32(std::ostream& out, std::int32_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        v = static_cast<std::int32_t>(__builtin_bswap32(static_cast<std::uint32_t>(v)));
    }
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::int32_t read_i32(std::istream& in) {
    std::int32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) {
        throw data_error("parameter file truncated");
    }
    if constexpr (std::endian::native == std::endian::big) {
        v = static_cast<std::int32_t>(__builtin_bswap32(static_cast<std::uint32_t>(v)));
    }
    return v;
}

} // namespace

void write_params(std::ostream& out, const PolicyParams& params) {
    out.write(kParamsMagic, sizeof(kParamsMagic) - 1);
    write_i32(out, params.shape.window);
    write_i32(out, params.shape.embed_dim);
    write_i32(out, params.shape.hidden_dim);
    write_i32(out, params.shape.vocab);
    static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(params.values.data()),
                  static_cast<std::streamsize>(params.values.size() * sizeof(double)));
    } else {
        for (double v : params.values) {
            auto bits = std::bit_cast<std::uint64_t>(v);
            bits = __builtin_bswap64(bits);
            out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
        }
    }
}

PolicyParams read_params(std::istream& in, const PolicyShape& expected) {
    char magic[sizeof(kParamsMagic) - 1];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kParamsMagic, sizeof magic) != 0) {
        throw data_error("bad parameter file magic (expected AERPOL1)");
    }
    PolicyShape shape = expected;
    shape.window = read_i32(in);
    shape.embed_dim = read_i32(in);
    shape.hidden_dim = read_i32(in);
    shape.vocab = read_i32(in);
    if (shape != expected) {
        throw config_error("parameter file dimensions do not match configuration");
    }
    PolicyParams params(shape);
    in.read(reinterpret_cast<char*>(params.values.data()),
            static_cast<std::streamsize>(params.values.size() * sizeof(double)));
    if (!in) {
        throw data_error("parameter file truncated");
    }
    if constexpr (std::endian::native == std::endian::big) {
        for (double& v : params.values) {
            auto bits = std::bit_cast<std::uint64_t>(v);
            bits = __builtin_bswap64(bits);
            v = std::bit_cast<double>(bits);
        }
    }
    for (double v : params.values) {
        if (!std::isfinite(v)) {
            throw data_error("parameter file contains non-finite values");
        }
    }
    return params;
}

} // namespace aerlab
