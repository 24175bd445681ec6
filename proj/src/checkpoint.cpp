#include "taesar/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

namespace taesar {

namespace {

constexpr char kMagic[8] = {'T', 'A', 'E', 'S', 'A', 'R', 'C', 'K'};
constexpr uint32_t kVersion = 1;
constexpr uint8_t kKindTransformer = 1;
constexpr uint8_t kKindMarkov = 2;

template <typename T>
void put(std::ostream & out, const T & v) {
    out.write(reinterpret_cast<const char *>(&v), sizeof(v));
}

template <typename T>
T get(std::istream & in, const std::string & path) {
    T v{};
    in.read(reinterpret_cast<char *>(&v), sizeof(v));
    if (!in) {
        throw data_error("ParseError: truncated checkpoint " + path);
    }
    return v;
}

void put_string(std::ostream & out, const std::string & s) {
    put<uint32_t>(out, static_cast<uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream & in, const std::string & path) {
    auto n = get<uint32_t>(in, path);
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) {
        throw data_error("ParseError: truncated checkpoint " + path);
    }
    return s;
}

std::ifstream open_checkpoint(const std::string & path, uint8_t & kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw data_error("ParseError: cannot open checkpoint " + path);
    }
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) {
        throw data_error("ParseError: bad checkpoint magic in " + path);
    }
    auto version = get<uint32_t>(in, path);
    if (version != kVersion) {
        throw data_error("ParseError: unsupported checkpoint version in " + path);
    }
    kind = get<uint8_t>(in, path);
    return in;
}

void put_header(std::ostream & out, uint8_t kind) {
    out.write(kMagic, 8);
    put<uint32_t>(out, kVersion);
    put<uint8_t>(out, kind);
}

void put_config(std::ostream & out, const PredictorConfig & cfg) {
    put<int32_t>(out, cfg.hidden_size);
    put<int32_t>(out, cfg.layers);
    put<int32_t>(out, cfg.heads);
    put<int32_t>(out, cfg.inner_size);
    put<double>(out, cfg.dropout);
    put<int32_t>(out, cfg.max_len);
    put<double>(out, cfg.lr);
    put<int32_t>(out, cfg.max_epochs);
    put<int32_t>(out, cfg.patience);
    put<int32_t>(out, cfg.batch_size);
    put<uint64_t>(out, cfg.seed);
}

PredictorConfig get_config(std::istream & in, const std::string & path) {
    PredictorConfig cfg;
    cfg.hidden_size = get<int32_t>(in, path);
    cfg.layers = get<int32_t>(in, path);
    cfg.heads = get<int32_t>(in, path);
    cfg.inner_size = get<int32_t>(in, path);
    cfg.dropout = get<double>(in, path);
    cfg.max_len = get<int32_t>(in, path);
    cfg.lr = get<double>(in, path);
    cfg.max_epochs = get<int32_t>(in, path);
    cfg.patience = get<int32_t>(in, path);
    cfg.batch_size = get<int32_t>(in, path);
    cfg.seed = get<uint64_t>(in, path);
    return cfg;
}

} // namespace

void save_checkpoint(const TransformerModelF & model, const std::string & path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw data_error("ParseError: cannot open " + path + " for writing");
    }
    put_header(out, kKindTransformer);
    put<uint8_t>(out, static_cast<uint8_t>(model.role()));
    put_string(out, model.domain_name());
    put<uint64_t>(out, model.catalog_fingerprint());
    put<int32_t>(out, model.vocab_size());
    put_config(out, model.net().config());
    const auto & p = model.net().p;
    put<uint64_t>(out, static_cast<uint64_t>(p.size()));
    out.write(reinterpret_cast<const char *>(p.data()),
              static_cast<std::streamsize>(p.size() * sizeof(float)));
    if (!out) {
        throw data_error("ParseError: failed writing checkpoint " + path);
    }
}

void save_checkpoint(const MarkovModel & model, const std::string & path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw data_error("ParseError: cannot open " + path + " for writing");
    }
    put_header(out, kKindMarkov);
    put<uint8_t>(out, static_cast<uint8_t>(model.role()));
    put_string(out, model.domain_name());
    put<uint64_t>(out, model.catalog_fingerprint());
    put<int32_t>(out, model.vocab_size());
    put<double>(out, model.smoothing());
    // Deterministic row order for reproducible files.
    std::vector<ItemIndex> rows;
    for (const auto & [from, _] : model.counts()) {
        rows.push_back(from);
    }
    std::sort(rows.begin(), rows.end());
    put<uint64_t>(out, static_cast<uint64_t>(rows.size()));
    for (ItemIndex from : rows) {
        const auto & row = model.counts().at(from);
        std::vector<std::pair<ItemIndex, double>> cols(row.begin(), row.end());
        std::sort(cols.begin(), cols.end());
        put<int32_t>(out, from);
        put<uint64_t>(out, static_cast<uint64_t>(cols.size()));
        for (const auto & [to, c] : cols) {
            put<int32_t>(out, to);
            put<double>(out, c);
        }
    }
}

CheckpointKind checkpoint_kind(const std::string & path) {
    uint8_t kind = 0;
    open_checkpoint(path, kind);
    return kind == kKindMarkov ? CheckpointKind::Markov : CheckpointKind::Transformer;
}

std::unique_ptr<TransformerModelF> load_transformer_checkpoint(
    const std::string & path, const DomainCatalog & catalog) {
    uint8_t kind = 0;
    std::ifstream in = open_checkpoint(path, kind);
    if (kind != kKindTransformer) {
        throw data_error("ParseError: checkpoint " + path + " is not a transformer model");
    }
    auto role = static_cast<Role>(get<uint8_t>(in, path));
    std::string domain = get_string(in, path);
    auto fingerprint = get<uint64_t>(in, path);
    if (fingerprint != catalog.fingerprint()) {
        throw data_error("VocabMismatch: checkpoint " + path +
                         " was trained against a different catalog");
    }
    auto vocab = get<int32_t>(in, path);
    PredictorConfig cfg = get_config(in, path);
    auto model = std::make_unique<TransformerModelF>(vocab, cfg, fingerprint, role, domain);
    auto n = get<uint64_t>(in, path);
    if (n != model->net().n_params()) {
        throw data_error("ParseError: parameter count mismatch in " + path);
    }
    in.read(reinterpret_cast<char *>(model->net().p.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
    if (!in) {
        throw data_error("ParseError: truncated checkpoint " + path);
    }
    return model;
}

std::unique_ptr<MarkovModel> load_markov_checkpoint(const std::string & path,
                                                    const DomainCatalog & catalog) {
    uint8_t kind = 0;
    std::ifstream in = open_checkpoint(path, kind);
    if (kind != kKindMarkov) {
        throw data_error("ParseError: checkpoint " + path + " is not a Markov model");
    }
    auto role = static_cast<Role>(get<uint8_t>(in, path));
    std::string domain = get_string(in, path);
    auto fingerprint = get<uint64_t>(in, path);
    if (fingerprint != catalog.fingerprint()) {
        throw data_error("VocabMismatch: checkpoint " + path +
                         " was trained against a different catalog");
    }
    auto vocab = get<int32_t>(in, path);
    auto smoothing = get<double>(in, path);
    auto model = std::make_unique<MarkovModel>(vocab, smoothing, fingerprint, role, domain);
    auto n_rows = get<uint64_t>(in, path);
    for (uint64_t r = 0; r < n_rows; ++r) {
        auto from = get<int32_t>(in, path);
        auto n_cols = get<uint64_t>(in, path);
        for (uint64_t c = 0; c < n_cols; ++c) {
            auto to = get<int32_t>(in, path);
            auto count = get<double>(in, path);
            model->add_transition(from, to, count);
        }
    }
    return model;
}

std::unique_ptr<Predictor> load_checkpoint(const std::string & path,
                                           const DomainCatalog & catalog) {
    if (checkpoint_kind(path) == CheckpointKind::Markov) {
        return load_markov_checkpoint(path, catalog);
    }
    return load_transformer_checkpoint(path, catalog);
}

} // namespace taesar
