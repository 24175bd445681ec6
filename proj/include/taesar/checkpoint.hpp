#pragma once

#include <memory>
#include <string>

#include "taesar/markov.hpp"
#include "taesar/transformer.hpp"

namespace taesar {

// Versioned binary model container: config, catalog fingerprint, role tag,
// raw parameter tensors. Loading rejects a fingerprint mismatch.

void save_checkpoint(const TransformerModelF & model, const std::string & path);
void save_checkpoint(const MarkovModel & model, const std::string & path);

enum class CheckpointKind { Transformer, Markov };

CheckpointKind checkpoint_kind(const std::string & path);

std::unique_ptr<TransformerModelF> load_transformer_checkpoint(
    const std::string & path, const DomainCatalog & catalog);

std::unique_ptr<MarkovModel> load_markov_checkpoint(const std::string & path,
                                                    const DomainCatalog & catalog);

// Dispatches on the stored kind.
std::unique_ptr<Predictor> load_checkpoint(const std::string & path,
                                           const DomainCatalog & catalog);

} // namespace taesar
