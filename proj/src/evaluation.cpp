#include "taesar/evaluation.hpp"

#include <cmath>
#include <fstream>

namespace taesar {

int rank_from_scores(std::span<const double> scores,
                     std::span<const ItemIndex> candidates, ItemIndex target) {
    if (scores.size() != candidates.size()) {
        throw numeric_error("BadInput: scores/candidates size mismatch");
    }
    double target_score = 0.0;
    bool found = false;
    for (size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i] == target) {
            target_score = scores[i];
            found = true;
            break;
        }
    }
    if (!found) {
        throw data_error("TargetNotInCandidates: label missing from candidate set");
    }
    int rank = 1;
    for (size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i] == target) {
            continue;
        }
        if (scores[i] > target_score ||
            (scores[i] == target_score && candidates[i] < target)) {
            ++rank;
        }
    }
    return rank;
}

int rank_of_target(const Predictor & model, std::span<const ItemIndex> context,
                   ItemIndex target, std::span<const ItemIndex> candidates) {
    Distribution dist = model.predict_next(context);
    std::vector<double> scores;
    scores.reserve(candidates.size());
    for (ItemIndex v : candidates) {
        if (v < 1 || v > model.vocab_size()) {
            throw data_error("UnknownItem: candidate outside vocabulary");
        }
        scores.push_back(dist.logprobs[v - 1]);
    }
    return rank_from_scores(scores, candidates, target);
}

namespace {

RankingMetrics metrics_from_ranks(const std::vector<int> & ranks,
                                  const std::vector<int> & ks) {
    RankingMetrics m;
    m.n_instances = static_cast<int64_t>(ranks.size());
    for (int k : ks) {
        MetricsAtK at;
        at.k = k;
        for (int rank : ranks) {
            if (rank <= k) {
                at.hit_rate += 1.0;
                at.ndcg += 1.0 / std::log2(static_cast<double>(rank) + 1.0);
                at.mrr += 1.0 / static_cast<double>(rank);
            }
        }
        if (!ranks.empty()) {
            const double n = static_cast<double>(ranks.size());
            at.hit_rate /= n;
            at.ndcg /= n;
            at.mrr /= n;
        }
        m.at.push_back(at);
    }
    return m;
}

} // namespace

std::map<DomainIndex, RankingMetrics> evaluate(const Predictor & model,
                                               const std::vector<EvalInstance> & instances,
                                               const std::vector<ItemIndex> & candidates,
                                               const std::vector<int> & ks) {
    if (instances.empty()) {
        throw data_error("EmptyTestSet: no evaluation instances");
    }
    std::map<DomainIndex, std::vector<int>> ranks;
    for (const auto & inst : instances) {
        ranks[inst.label_domain].push_back(
            rank_of_target(model, inst.context, inst.label, candidates));
    }
    std::map<DomainIndex, RankingMetrics> out;
    for (const auto & [domain, r] : ranks) {
        out[domain] = metrics_from_ranks(r, ks);
    }
    return out;
}

RankingMetrics evaluate_flat(const Predictor & model,
                             const std::vector<EvalInstance> & instances,
                             const std::vector<ItemIndex> & candidates,
                             const std::vector<int> & ks) {
    if (instances.empty()) {
        throw data_error("EmptyTestSet: no evaluation instances");
    }
    std::vector<int> ranks;
    ranks.reserve(instances.size());
    for (const auto & inst : instances) {
        ranks.push_back(rank_of_target(model, inst.context, inst.label, candidates));
    }
    return metrics_from_ranks(ranks, ks);
}

void write_metrics_csv(const std::map<DomainIndex, RankingMetrics> & metrics,
                       const DomainCatalog & catalog, const std::string & path) {
    std::ofstream out(path);
    if (!out) {
        throw data_error("ParseError: cannot open " + path + " for writing");
    }
    out << "domain,k,n_instances,hr,ndcg,mrr\n";
    for (const auto & [domain, m] : metrics) {
        for (const auto & at : m.at) {
            out << catalog.name(domain) << ',' << at.k << ',' << m.n_instances << ','
                << at.hit_rate << ',' << at.ndcg << ',' << at.mrr << '\n';
        }
    }
}

GradientConflictMatrix gradient_conflict(
    TransformerModelF & model,
    const std::vector<std::pair<std::string, std::vector<TrainItem>>> & groups) {
    const size_t n = groups.size();
    std::vector<std::vector<double>> grads;
    grads.reserve(n);
    Net<float>::Cache cache;
    for (const auto & [label, items] : groups) {
        if (items.empty()) {
            throw data_error("EmptyDomainBatch: no instances for group '" + label + "'");
        }
        model.net().zero_grad();
        int64_t n_targets = 0;
        for (const auto & item : items) {
            n_targets += static_cast<int64_t>(item.targets.size());
        }
        const double scale = 1.0 / static_cast<double>(n_targets);
        for (const auto & item : items) {
            model.net().loss_and_grad(item, cache, scale, false, nullptr);
        }
        std::vector<double> flat(model.net().g.begin(), model.net().g.end());
        grads.push_back(std::move(flat));
    }
    model.net().zero_grad();

    GradientConflictMatrix matrix;
    for (const auto & [label, _] : groups) {
        matrix.labels.push_back(label);
    }
    matrix.cosine.assign(n, std::vector<double>(n, 0.0));
    std::vector<double> norms(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (double v : grads[i]) {
            acc += v * v;
        }
        norms[i] = std::sqrt(acc);
        if (norms[i] == 0.0) {
            throw numeric_error("EmptyDomainBatch: zero gradient for group '" +
                                matrix.labels[i] + "'");
        }
    }
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i; j < n; ++j) {
            double dot = 0.0;
            for (size_t k = 0; k < grads[i].size(); ++k) {
                dot += grads[i][k] * grads[j][k];
            }
            const double c = dot / (norms[i] * norms[j]);
            matrix.cosine[i][j] = c;
            matrix.cosine[j][i] = c;
        }
    }
    return matrix;
}

GradientConflictMatrix gradient_conflict(TransformerModelF & model, const Corpus & corpus,
                                         int max_items_per_domain, uint64_t seed) {
    model.check_fingerprint(corpus.catalog);
    std::vector<std::pair<std::string, std::vector<TrainItem>>> groups;
    for (DomainIndex d = 0; d < corpus.catalog.num_domains(); ++d) {
        auto items = dsp_tasks(corpus.merged, corpus.catalog, d,
                               model.net().config().max_len, nullptr);
        if (items.empty()) {
            throw data_error("EmptyDomainBatch: domain '" + corpus.catalog.name(d) +
                             "' has no DSP positions");
        }
        if (max_items_per_domain > 0 &&
            static_cast<int>(items.size()) > max_items_per_domain) {
            std::mt19937_64 rng(seed + static_cast<uint64_t>(d));
            std::shuffle(items.begin(), items.end(), rng);
            items.resize(max_items_per_domain);
        }
        groups.emplace_back(corpus.catalog.name(d), std::move(items));
    }
    return gradient_conflict(model, groups);
}

void write_conflict_csv(const GradientConflictMatrix & matrix, const std::string & path) {
    std::ofstream out(path);
    if (!out) {
        throw data_error("ParseError: cannot open " + path + " for writing");
    }
    out << "domain";
    for (const auto & label : matrix.labels) {
        out << ',' << label;
    }
    out << '\n';
    for (size_t i = 0; i < matrix.labels.size(); ++i) {
        out << matrix.labels[i];
        for (double v : matrix.cosine[i]) {
            out << ',' << v;
        }
        out << '\n';
    }
}

double ComparisonReport::mean_metric(const std::string & arm, int k,
                                     double MetricsAtK::* field) const {
    double sum = 0.0;
    int n = 0;
    for (const auto & row : rows) {
        if (row.arm != arm) {
            continue;
        }
        sum += row.metrics.at_k(k).*field;
        ++n;
    }
    if (n == 0) {
        throw data_error("EmptyTestSet: no comparison rows for arm '" + arm + "'");
    }
    return sum / static_cast<double>(n);
}

void write_comparison_csv(const ComparisonReport & report, const std::string & path) {
    std::ofstream out(path);
    if (!out) {
        throw data_error("ParseError: cannot open " + path + " for writing");
    }
    out << "arm,seed,k,n_instances,hr,ndcg,mrr\n";
    for (const auto & row : report.rows) {
        for (const auto & at : row.metrics.at) {
            out << row.arm << ',' << row.seed << ',' << at.k << ','
                << row.metrics.n_instances << ',' << at.hit_rate << ',' << at.ndcg << ','
                << at.mrr << '\n';
        }
    }
}

void write_comparison_markdown(const ComparisonReport & report, const std::string & path) {
    std::ofstream out(path);
    if (!out) {
        throw data_error("ParseError: cannot open " + path + " for writing");
    }
    out << "# Downstream comparison\n\n";
    out << "| arm | seed | k | HR | NDCG | MRR |\n";
    out << "| --- | --- | --- | --- | --- | --- |\n";
    for (const auto & row : report.rows) {
        for (const auto & at : row.metrics.at) {
            out << "| " << row.arm << " | " << row.seed << " | " << at.k << " | "
                << at.hit_rate << " | " << at.ndcg << " | " << at.mrr << " |\n";
        }
    }
    out << "\nMean HR@10: original " << report.mean_metric("original", 10, &MetricsAtK::hit_rate)
        << ", naive-mixed " << report.mean_metric("naive-mixed", 10, &MetricsAtK::hit_rate)
        << ", regenerated " << report.mean_metric("regenerated", 10, &MetricsAtK::hit_rate)
        << "\n";
}

} // namespace taesar
