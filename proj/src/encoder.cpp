#include "mcml/encoder.hpp"

#include <cmath>

#include "mcml/corpus.hpp"
#include "mcml/rng.hpp"

namespace mcml::enc {

namespace {

diff::Mat uniform_matrix(int rows, int cols, double bound, Rng& rng) {
    diff::Mat m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
    return m;
}

}  // namespace

void init_encoder(diff::ParamStore& params, const EncoderConfig& config, std::uint64_t seed) {
    if (config.vocab_size < 2 || config.d_e < 1 || config.d_h < 1)
        throw SpecError("init_encoder: dimensions must be positive (vocab >= 2)");
    Rng rng(seed);
    diff::Mat E = uniform_matrix(config.vocab_size, config.d_e,
                                 1.0 / std::sqrt(static_cast<double>(config.d_e)), rng);
    E.row(corpus::kPadId).setZero();
    params.add_mat(kEmbedding, std::move(E));
    params.add_mat(kW1, uniform_matrix(config.d_h, 3 * config.d_e,
                                       1.0 / std::sqrt(3.0 * config.d_e), rng));
    params.add_vec(kB1, diff::Vec::Zero(config.d_h));
    params.add_mat(kW2, uniform_matrix(config.d_h, config.d_h,
                                       1.0 / std::sqrt(static_cast<double>(config.d_h)), rng));
    params.add_vec(kB2, diff::Vec::Zero(config.d_h));
}

EncoderConfig encoder_config(const diff::ParamStore& params) {
    const diff::Slot& E = params.at(kEmbedding);
    const diff::Slot& W1 = params.at(kW1);
    return EncoderConfig{E.rows(), E.cols(), W1.rows()};
}

std::vector<diff::NodeId> encode(diff::Graph& g, std::span<const int> token_ids) {
    const diff::Slot& E = g.params().at(kEmbedding);
    const int vocab_size = E.rows();
    const int d_e = E.cols();
    for (int id : token_ids)
        if (id < 0 || id >= vocab_size)
            throw LookupError("encode: token id " + std::to_string(id) +
                              " out of range (vocab " + std::to_string(vocab_size) + ")");
    // Padding and boundary positions feed a constant zero so row 1 of the
    // table stays out of every gradient.
    auto embed = [&](long pos) -> diff::NodeId {
        if (pos < 0 || pos >= static_cast<long>(token_ids.size()))
            return g.input(diff::Vec::Zero(d_e));
        int id = token_ids[static_cast<std::size_t>(pos)];
        if (id == corpus::kPadId) return g.input(diff::Vec::Zero(d_e));
        return g.param_mat_row(kEmbedding, id);
    };
    std::vector<diff::NodeId> out;
    out.reserve(token_ids.size());
    for (long i = 0; i < static_cast<long>(token_ids.size()); ++i) {
        diff::NodeId window[3] = {embed(i - 1), embed(i), embed(i + 1)};
        diff::NodeId x = g.concat(window);
        diff::NodeId h = g.tanh(g.add(g.matvec(kW1, x), g.param_vec(kB1)));
        out.push_back(g.add(g.matvec(kW2, h), g.param_vec(kB2)));
    }
    return out;
}

}  // namespace mcml::enc
