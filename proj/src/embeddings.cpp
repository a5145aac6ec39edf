#include "bankbench/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "bankbench/linear.hpp"
#include "bankbench/rng.hpp"
#include "numfmt.hpp"

namespace bankbench {

namespace {

// four partial sums so the compiler can vectorize the reduction
double dot(std::span<const double> a, std::span<const double> b) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= a.size(); i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < a.size(); ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

// -log s(z)
double neg_log_sigmoid(double z) { return softplus(-z); }

// Walker alias table over unigram^0.75 for ids with non-zero frequency.
class NoiseSampler {
public:
    explicit NoiseSampler(const Vocabulary& vocab) {
        std::vector<double> weight;
        double total = 0.0;
        for (std::uint32_t id = 0; id < vocab.size(); ++id) {
            const auto f = vocab.frequency(id);
            if (f == 0) continue;
            weight.push_back(std::pow(static_cast<double>(f), 0.75));
            total += weight.back();
            ids_.push_back(id);
        }
        const std::size_t n = ids_.size();
        prob_.assign(n, 1.0);
        alias_.resize(n);
        std::vector<std::size_t> small, large;
        for (std::size_t i = 0; i < n; ++i) {
            weight[i] *= static_cast<double>(n) / total;
            alias_[i] = static_cast<std::uint32_t>(i);
            (weight[i] < 1.0 ? small : large).push_back(i);
        }
        while (!small.empty() && !large.empty()) {
            const std::size_t lo = small.back(), hi = large.back();
            small.pop_back();
            prob_[lo] = weight[lo];
            alias_[lo] = static_cast<std::uint32_t>(hi);
            weight[hi] -= 1.0 - weight[lo];
            if (weight[hi] < 1.0) {
                large.pop_back();
                small.push_back(hi);
            }
        }
    }

    [[nodiscard]] bool empty() const { return ids_.empty(); }

    std::uint32_t draw(Rng& rng) const {
        const double x = rng.uniform() * static_cast<double>(ids_.size());
        auto slot = static_cast<std::size_t>(x);
        if (slot >= ids_.size()) slot = ids_.size() - 1;
        const double frac = x - static_cast<double>(slot);
        return ids_[frac < prob_[slot] ? slot : alias_[slot]];
    }

private:
    std::vector<std::uint32_t> ids_;
    std::vector<double> prob_;
    std::vector<std::uint32_t> alias_;
};

}  // namespace

SkipGramModel init_skipgram(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed) {
    if (dim == 0) throw std::invalid_argument("skip-gram dimension must be positive");
    SkipGramModel m;
    m.vocab = vocab;
    m.dim = dim;
    m.input_vectors.resize(vocab.size() * dim);
    m.output_vectors.assign(vocab.size() * dim, 0.0);
    Rng rng(seed);
    const double r = 0.5 / static_cast<double>(dim);
    for (double& x : m.input_vectors) x = rng.uniform(-r, r);
    return m;
}

SkipGramModel train_skipgram(std::span<const TokenizedDoc> docs, const Vocabulary& vocab, const SkipGramOptions& opts,
                             SkipGramTrace* trace) {
    if (opts.window < 1 || opts.negatives < 0 || opts.epochs < 0 || opts.lr < 0.0) {
        throw std::invalid_argument("invalid skip-gram options");
    }
    std::vector<std::vector<std::uint32_t>> sentences;
    std::uint64_t total_tokens = 0;
    for (const auto& doc : docs) {
        if (doc.empty()) continue;
        sentences.push_back(vocab.to_ids(doc));
        total_tokens += doc.size();
    }
    if (total_tokens == 0) throw std::invalid_argument("skip-gram: empty corpus");

    Rng rng(opts.seed);
    SkipGramModel model = init_skipgram(vocab, opts.dim, rng.fork());
    const NoiseSampler noise(vocab);
    const std::size_t d = opts.dim;
    std::vector<double> center_grad(d);

    SkipGramTrace local;
    SkipGramTrace& tr = trace ? *trace : local;
    tr = SkipGramTrace{};

    const double budget = static_cast<double>(total_tokens) * static_cast<double>(opts.epochs);
    std::uint64_t processed = 0;
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        double loss_sum = 0.0;
        std::uint64_t epoch_pairs = 0;
        for (const auto& sent : sentences) {
            const auto n = static_cast<std::ptrdiff_t>(sent.size());
            for (std::ptrdiff_t i = 0; i < n; ++i, ++processed) {
                const double lr =
                    opts.lr * std::max(1e-4, 1.0 - static_cast<double>(processed) / budget);
                const auto shrink = static_cast<std::ptrdiff_t>(rng.below(static_cast<std::uint64_t>(opts.window)));
                const std::ptrdiff_t w = opts.window - shrink;
                const std::uint32_t center = sent[static_cast<std::size_t>(i)];
                auto v = model.input(center);
                for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - w); j <= std::min(n - 1, i + w); ++j) {
                    if (j == i) continue;
                    const std::uint32_t ctx = sent[static_cast<std::size_t>(j)];
                    std::fill(center_grad.begin(), center_grad.end(), 0.0);
                    // target 0 is the true context, then the noise draws
                    for (int k = 0; k <= opts.negatives; ++k) {
                        std::uint32_t target = ctx;
                        double label = 1.0;
                        if (k > 0) {
                            if (noise.empty()) break;
                            target = noise.draw(rng);
                            if (target == ctx) continue;
                            label = 0.0;
                        }
                        auto u = model.output(target);
                        const double z = dot(u, v);
                        if (trace) loss_sum += label > 0.0 ? neg_log_sigmoid(z) : neg_log_sigmoid(-z);
                        const double g = lr * (label - sigmoid(z));
                        for (std::size_t c = 0; c < d; ++c) {
                            center_grad[c] += g * u[c];
                            u[c] += g * v[c];
                        }
                    }
                    for (std::size_t c = 0; c < d; ++c) v[c] += center_grad[c];
                    ++epoch_pairs;
                }
            }
        }
        tr.epoch_loss.push_back(epoch_pairs ? loss_sum / static_cast<double>(epoch_pairs) : 0.0);
        tr.pairs += epoch_pairs;
    }
    return model;
}

double skipgram_pair_loss(const SkipGramModel& model, std::uint32_t center, std::uint32_t context,
                          std::span<const std::uint32_t> negatives) {
    const auto v = model.input(center);
    double loss = neg_log_sigmoid(dot(model.output(context), v));
    for (auto n : negatives) loss += neg_log_sigmoid(-dot(model.output(n), v));
    return loss;
}

SkipGramPairGradient skipgram_pair_gradient(const SkipGramModel& model, std::uint32_t center, std::uint32_t context,
                                            std::span<const std::uint32_t> negatives) {
    const std::size_t d = model.dim;
    const auto v = model.input(center);
    SkipGramPairGradient g;
    g.center.assign(d, 0.0);

    const auto u_ctx = model.output(context);
    const double s_ctx = sigmoid(dot(u_ctx, v)) - 1.0;
    g.context.resize(d);
    for (std::size_t c = 0; c < d; ++c) {
        g.center[c] += s_ctx * u_ctx[c];
        g.context[c] = s_ctx * v[c];
    }
    for (auto n : negatives) {
        const auto u = model.output(n);
        const double s = sigmoid(dot(u, v));
        std::vector<double> row(d);
        for (std::size_t c = 0; c < d; ++c) {
            g.center[c] += s * u[c];
            row[c] = s * v[c];
        }
        g.negatives.push_back(std::move(row));
    }
    return g;
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
    const double na = std::sqrt(dot(a, a));
    const double nb = std::sqrt(dot(b, b));
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

void SkipGramModel::write_vec(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << vocab.size() << ' ' << dim << '\n';
    for (std::uint32_t id = 0; id < vocab.size(); ++id) {
        out << vocab.token(id);
        for (double x : input(id)) out << ' ' << format_double(x);
        out << '\n';
    }
}

SkipGramModel SkipGramModel::read_vec(const std::filesystem::path& path, const Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::size_t n = 0, d = 0;
    if (!(in >> n >> d) || d == 0) throw std::runtime_error(path.string() + ": bad header");
    if (n != vocab.size()) throw std::runtime_error(path.string() + ": row count does not match vocabulary");
    SkipGramModel m;
    m.vocab = vocab;
    m.dim = d;
    m.input_vectors.resize(n * d);
    m.output_vectors.assign(n * d, 0.0);
    std::string token;
    for (std::uint32_t id = 0; id < n; ++id) {
        if (!(in >> token) || token != vocab.token(id)) {
            throw std::runtime_error(path.string() + ":" + std::to_string(id + 2) + ": token does not match vocabulary");
        }
        for (double& x : m.input(id)) {
            if (!(in >> x)) throw std::runtime_error(path.string() + ":" + std::to_string(id + 2) + ": bad value");
        }
    }
    return m;
}

DocEmbedding embed_doc(const TokenizedDoc& doc, const SkipGramModel& model) {
    DocEmbedding e;
    e.source = EmbeddingSource::trained_w2v;
    e.vector.assign(model.dim, 0.0);
    if (doc.empty()) return e;
    for (const auto& tok : doc) {
        const auto v = model.input(model.vocab.id_or_unk(tok));
        for (std::size_t c = 0; c < model.dim; ++c) e.vector[c] += v[c];
    }
    const auto n = static_cast<double>(doc.size());
    for (double& x : e.vector) x /= n;
    return e;
}

std::vector<double> concat_history(std::span<const DocEmbedding> slots) {
    std::vector<double> out;
    if (slots.empty()) return out;
    const std::size_t d = slots.front().vector.size();
    out.reserve(d * slots.size());
    for (const auto& s : slots) {
        if (s.vector.size() != d) throw std::invalid_argument("concat_history: slot dimensions differ");
        out.insert(out.end(), s.vector.begin(), s.vector.end());
    }
    return out;
}

EmbeddingTable load_embedding_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    auto fail = [&](std::size_t line, const std::string& msg) {
        return std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + msg);
    };
    std::string line;
    if (!std::getline(in, line) || !line.starts_with("dim=")) throw fail(1, "expected header dim=<d>");
    EmbeddingTable table;
    {
        const char* b = line.data() + 4;
        const char* e = line.data() + line.size();
        auto [p, ec] = std::from_chars(b, e, table.dim);
        if (ec != std::errc{} || p != e || table.dim == 0) throw fail(1, "bad dimension in header");
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) throw fail(lineno, "expected doc_key<TAB>values");
        std::string key = line.substr(0, tab);
        DocEmbedding emb;
        emb.source = EmbeddingSource::imported;
        emb.vector.reserve(table.dim);
        std::size_t pos = tab + 1;
        while (pos <= line.size()) {
            auto next = line.find('\t', pos);
            if (next == std::string::npos) next = line.size();
            double x = 0.0;
            auto [p, ec] = std::from_chars(line.data() + pos, line.data() + next, x);
            if (ec != std::errc{} || p != line.data() + next) throw fail(lineno, "unparsable value for " + key);
            if (!std::isfinite(x)) throw fail(lineno, "non-finite value for " + key);
            emb.vector.push_back(x);
            pos = next + 1;
        }
        if (emb.vector.size() != table.dim) {
            throw fail(lineno, key + " has " + std::to_string(emb.vector.size()) + " values, header declares " +
                                   std::to_string(table.dim));
        }
        if (!table.rows.emplace(key, std::move(emb)).second) throw fail(lineno, "duplicate key " + key);
    }
    return table;
}

void write_embedding_table(const EmbeddingTable& table, const std::filesystem::path& path) {
    std::vector<const std::string*> keys;
    keys.reserve(table.rows.size());
    for (const auto& entry : table.rows) keys.push_back(&entry.first);
    std::sort(keys.begin(), keys.end(), [](auto a, auto b) { return *a < *b; });
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "dim=" << table.dim << '\n';
    for (const auto* key : keys) {
        const auto& v = table.rows.at(*key).vector;
        if (v.size() != table.dim) throw std::invalid_argument("embedding row " + *key + " has the wrong dimension");
        out << *key;
        for (double x : v) out << '\t' << format_double(x);
        out << '\n';
    }
}

}  // namespace bankbench
