#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "taesar/corpus.hpp"
#include "taesar/distribution.hpp"

namespace taesar {

enum class Role : uint8_t {
    Base = 0,
    TargetExpert = 1,
    SourceExpert = 2,
};

std::string role_name(Role role);

struct PredictorConfig {
    int hidden_size = 128;
    int layers = 2;
    int heads = 2;
    int inner_size = 128;
    double dropout = 0.2;
    int max_len = 128;
    double lr = 1e-3;
    int max_epochs = 300;
    int patience = 30;
    int batch_size = 32;
    uint64_t seed = 42;

    void validate() const {
        if (hidden_size < 1 || layers < 1 || heads < 1 || inner_size < 1 ||
            max_len < 1 || max_epochs < 1 || patience < 1 || batch_size < 1) {
            throw config_error("BadConfig: all predictor counts must be >= 1");
        }
        if (hidden_size % heads != 0) {
            throw config_error("BadConfig: hidden_size must be divisible by heads");
        }
        if (!(dropout >= 0.0 && dropout < 1.0)) {
            throw config_error("BadConfig: dropout must be in [0,1)");
        }
        if (!(lr > 0.0)) {
            throw config_error("BadConfig: lr must be positive");
        }
    }
};

// A next-item categorical predictor over the full real-item vocabulary.
class Predictor {
public:
    virtual ~Predictor() = default;

    // Distribution over items 1..num_items (ascending dense index). The prefix
    // is truncated to the model's most recent max_len items.
    virtual Distribution predict_next(std::span<const ItemIndex> prefix) const = 0;

    virtual Role role() const = 0;
    virtual uint64_t catalog_fingerprint() const = 0;
    virtual ItemIndex vocab_size() const = 0;

    void check_fingerprint(const DomainCatalog & catalog) const {
        if (catalog.fingerprint() != catalog_fingerprint()) {
            throw data_error("VocabMismatch: model catalog fingerprint differs");
        }
    }
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double valid_metric = 0.0; // NG@10 when validation is supplied, else 0
};

struct TrainingReport {
    std::vector<EpochRecord> epochs;
    int stopping_epoch = 0;
    double wall_clock_seconds = 0.0;
};

void write_training_report_csv(const TrainingReport & report, const std::string & path);

} // namespace taesar
