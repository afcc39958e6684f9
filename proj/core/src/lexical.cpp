#include "clir/lexical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_set>

#include "clir/error.hpp"

namespace clir {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct ResolvedTerm {
    const std::string* term;
    double query_weight;
    const TermStats* stats;
};

double bm25_term(double tf, double doc_len, double avgdl, const TermStats& ts, double num_docs,
                 const LexicalParams& p) {
    const double df = static_cast<double>(ts.df);
    const double idf = std::log(1.0 + (num_docs - df + 0.5) / (df + 0.5));
    const double norm = avgdl > 0.0 ? doc_len / avgdl : 0.0;
    return idf * tf / (tf + p.k1 * (1.0 - p.b + p.b * norm));
}

double hmm_term(double tf, double doc_len, double cf, double total, double lambda) {
    const double p_doc = doc_len > 0.0 ? tf / doc_len : 0.0;
    const double p_coll = total > 0.0 ? cf / total : 0.0;
    const double mixture = lambda * p_doc + (1.0 - lambda) * p_coll;
    return mixture > 0.0 ? std::log(mixture) : kNegInf;
}

// Scores one document. Query terms are visited in the query's (sorted) order so
// every entry point produces bit-identical sums.
double score_document(const InvertedIndex& index, std::uint32_t doc, const WeightedQuery& query,
                      LexicalScorer scorer, const LexicalParams& params) {
    const auto& stats = index.stats();
    const double doc_len = index.doc_length(doc);
    double score = 0.0;
    for (const auto& [term, weight] : query) {
        const double tf = index.term_weight(doc, term);
        const TermStats* ts = stats.find(term);
        if (scorer == LexicalScorer::Bm25) {
            if (!ts || tf <= 0.0) continue;
            score += weight * bm25_term(tf, doc_len, stats.average_length(), *ts,
                                        static_cast<double>(stats.num_docs), params);
        } else {
            const double term_score =
                hmm_term(tf, doc_len, ts ? ts->cf : 0.0, stats.total_weight, params.lambda);
            if (term_score == kNegInf) return kNegInf;
            score += weight * term_score;
        }
    }
    return score;
}

std::uint32_t require_doc(const InvertedIndex& index, const std::string& doc_id) {
    auto ordinal = index.doc_ordinal(doc_id);
    if (!ordinal) throw ValidationError("document '" + doc_id + "' is not in the index");
    return *ordinal;
}

Ranking rank_candidates(const InvertedIndex& index, const WeightedQuery& query, LexicalScorer scorer,
                        std::size_t k, const LexicalParams& params) {
    std::vector<std::uint32_t> candidates;
    for (const auto& [term, weight] : query) {
        for (const auto& posting : index.postings(term)) candidates.push_back(posting.doc);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    Ranking ranking;
    ranking.reserve(candidates.size());
    for (auto doc : candidates) {
        const double score = score_document(index, doc, query, scorer, params);
        if (score == kNegInf || std::isnan(score)) continue;
        ranking.push_back({index.doc_ids()[doc], score});
    }
    truncate_ranking(ranking, k);
    return ranking;
}

}  // namespace

void LexicalParams::validate() const {
    if (!(k1 >= 0.0)) throw ValidationError("k1 must be >= 0");
    if (!(b >= 0.0 && b <= 1.0)) throw ValidationError("b must be in [0, 1]");
    if (!(lambda > 0.0 && lambda <= 1.0)) throw ValidationError("lambda must be in (0, 1]");
    if (!(rm3_alpha >= 0.0 && rm3_alpha <= 1.0)) throw ValidationError("rm3_alpha must be in [0, 1]");
    if (rm3_fb_docs < 1) throw ValidationError("rm3_fb_docs must be >= 1");
    if (rm3_fb_terms < 1) throw ValidationError("rm3_fb_terms must be >= 1");
}

LexicalScorer parse_lexical_scorer(std::string_view name) {
    if (name == "bm25") return LexicalScorer::Bm25;
    if (name == "hmm") return LexicalScorer::Hmm;
    throw ValidationError("unknown lexical scorer '" + std::string(name) + "'");
}

std::string_view to_string(LexicalScorer scorer) noexcept {
    return scorer == LexicalScorer::Bm25 ? "bm25" : "hmm";
}

WeightedQuery normalize_query(WeightedQuery query) {
    std::map<std::string, double> merged;
    for (auto& [term, weight] : query) merged[std::move(term)] += weight;
    WeightedQuery out;
    for (auto& [term, weight] : merged) {
        if (weight > 0.0) out.emplace_back(term, weight);
    }
    return out;
}

WeightedQuery make_query(std::span<const std::string> terms) {
    WeightedQuery query;
    query.reserve(terms.size());
    for (const auto& t : terms) query.emplace_back(t, 1.0);
    return normalize_query(std::move(query));
}

CollectionStats CollectionStats::from_bags(std::span<const DocBag> bags) {
    std::vector<const DocBag*> ordered;
    ordered.reserve(bags.size());
    for (const auto& bag : bags) ordered.push_back(&bag);
    std::sort(ordered.begin(), ordered.end(), [](const DocBag* a, const DocBag* b) { return a->doc_id < b->doc_id; });

    CollectionStats stats;
    stats.num_docs = ordered.size();
    for (const DocBag* doc : ordered) {
        double length = 0.0;
        for (const auto& [term, weight] : doc->bag) {
            const double w = static_cast<float>(weight);
            if (!(w > 0.0)) continue;
            length += w;
            auto& ts = stats.terms[term];
            ts.df += 1;
            ts.cf += w;
        }
        stats.total_weight += length;
    }
    return stats;
}

const TermStats* CollectionStats::find(const std::string& term) const {
    auto it = terms.find(term);
    return it == terms.end() ? nullptr : &it->second;
}

InvertedIndex InvertedIndex::build(std::span<const DocBag> bags, std::optional<CollectionStats> global) {
    std::vector<const DocBag*> ordered;
    ordered.reserve(bags.size());
    for (const auto& bag : bags) ordered.push_back(&bag);
    std::sort(ordered.begin(), ordered.end(), [](const DocBag* a, const DocBag* b) { return a->doc_id < b->doc_id; });
    for (std::size_t i = 1; i < ordered.size(); ++i) {
        if (ordered[i]->doc_id == ordered[i - 1]->doc_id) {
            throw ValidationError("duplicate document id '" + ordered[i]->doc_id + "'");
        }
    }

    InvertedIndex index;
    std::map<std::string, std::vector<Posting>> postings;
    for (std::uint32_t doc = 0; doc < ordered.size(); ++doc) {
        index.doc_ids_.push_back(ordered[doc]->doc_id);
        double length = 0.0;
        for (const auto& [term, weight] : ordered[doc]->bag) {
            const float w = static_cast<float>(weight);
            if (!(w > 0.0F)) continue;
            length += static_cast<double>(w);
            postings[term].push_back({doc, w});
        }
        index.doc_lengths_.push_back(length);
    }
    for (auto& [term, list] : postings) {
        index.term_ids_.emplace(term, static_cast<std::uint32_t>(index.terms_.size()));
        index.terms_.push_back(term);
        index.postings_.push_back(std::move(list));
    }
    index.build_forward();

    if (global) {
        index.stats_ = std::move(*global);
        index.global_stats_ = true;
    } else {
        index.stats_ = CollectionStats::from_bags(bags);
    }
    return index;
}

void InvertedIndex::build_forward() {
    forward_.assign(doc_ids_.size(), {});
    for (std::uint32_t term = 0; term < postings_.size(); ++term) {
        for (const auto& p : postings_[term]) forward_[p.doc].emplace_back(term, p.weight);
    }
}

std::optional<std::uint32_t> InvertedIndex::doc_ordinal(const std::string& doc_id) const {
    auto it = std::lower_bound(doc_ids_.begin(), doc_ids_.end(), doc_id);
    if (it == doc_ids_.end() || *it != doc_id) return std::nullopt;
    return static_cast<std::uint32_t>(it - doc_ids_.begin());
}

std::span<const InvertedIndex::Posting> InvertedIndex::postings(const std::string& term) const {
    auto it = term_ids_.find(term);
    if (it == term_ids_.end()) return {};
    return postings_[it->second];
}

double InvertedIndex::term_weight(std::uint32_t doc, const std::string& term) const {
    auto it = term_ids_.find(term);
    if (it == term_ids_.end()) return 0.0;
    const auto& row = forward_.at(doc);
    auto pos = std::lower_bound(row.begin(), row.end(), it->second,
                                [](const auto& entry, std::uint32_t id) { return entry.first < id; });
    return pos != row.end() && pos->first == it->second ? static_cast<double>(pos->second) : 0.0;
}

double bm25_score(const InvertedIndex& index, const WeightedQuery& query, const std::string& doc_id,
                  const LexicalParams& params) {
    params.validate();
    return score_document(index, require_doc(index, doc_id), normalize_query(query), LexicalScorer::Bm25, params);
}

double hmm_score(const InvertedIndex& index, const WeightedQuery& query, const std::string& doc_id,
                 const LexicalParams& params) {
    params.validate();
    return score_document(index, require_doc(index, doc_id), normalize_query(query), LexicalScorer::Hmm, params);
}

WeightedQuery rm3_expand(const InvertedIndex& index, const WeightedQuery& query, const Ranking& feedback,
                         const LexicalParams& params) {
    const InvertedIndex* one[] = {&index};
    return rm3_expand(one, query, feedback, params);
}

WeightedQuery rm3_expand(std::span<const InvertedIndex* const> indexes, const WeightedQuery& query,
                         const Ranking& feedback, const LexicalParams& params) {
    params.validate();
    if (feedback.empty()) return query;

    const std::size_t fb_docs = std::min(params.rm3_fb_docs, feedback.size());
    double max_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < fb_docs; ++i) max_score = std::max(max_score, feedback[i].score);
    std::vector<double> doc_weights(fb_docs);
    double z = 0.0;
    for (std::size_t i = 0; i < fb_docs; ++i) {
        doc_weights[i] = std::exp(feedback[i].score - max_score);
        z += doc_weights[i];
    }

    std::map<std::string, double> relevance;
    for (std::size_t i = 0; i < fb_docs; ++i) {
        const InvertedIndex* holder = nullptr;
        std::uint32_t doc = 0;
        for (const auto* candidate : indexes) {
            if (auto ordinal = candidate->doc_ordinal(feedback[i].id)) {
                holder = candidate;
                doc = *ordinal;
                break;
            }
        }
        if (!holder) throw ValidationError("feedback document '" + feedback[i].id + "' is not in the index");
        const InvertedIndex& index = *holder;
        const double length = index.doc_length(doc);
        if (length <= 0.0) continue;
        const double w = doc_weights[i] / z;
        for (const auto& [term, weight] : index.doc_terms(doc)) {
            relevance[index.terms()[term]] += w * static_cast<double>(weight) / length;
        }
    }

    std::vector<std::pair<std::string, double>> expansion(relevance.begin(), relevance.end());
    std::sort(expansion.begin(), expansion.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (expansion.size() > params.rm3_fb_terms) expansion.resize(params.rm3_fb_terms);

    const WeightedQuery original = normalize_query(query);
    double query_mass = 0.0;
    for (const auto& [term, weight] : original) query_mass += weight;

    std::map<std::string, double> combined;
    for (const auto& [term, weight] : original) combined[term] += params.rm3_alpha * weight / query_mass;
    for (const auto& [term, p] : expansion) combined[term] += (1.0 - params.rm3_alpha) * p;

    double total = 0.0;
    for (const auto& [term, weight] : combined) total += weight;
    WeightedQuery expanded;
    for (const auto& [term, weight] : combined) {
        if (weight > 0.0) expanded.emplace_back(term, weight / total);
    }
    return expanded;
}

Ranking search_lexical(const InvertedIndex& index, const WeightedQuery& query, LexicalScorer scorer, bool rm3,
                       std::size_t k, const LexicalParams& params) {
    params.validate();
    if (k < 1) throw ValidationError("k must be >= 1");
    WeightedQuery prepared = normalize_query(query);
    if (prepared.empty()) throw ValidationError("empty query");

    auto restrict_to_collection = [&](WeightedQuery q) {
        if (scorer == LexicalScorer::Hmm) {
            std::erase_if(q, [&](const auto& entry) {
                const TermStats* ts = index.stats().find(entry.first);
                return !ts || !(ts->cf > 0.0);
            });
        }
        return q;
    };

    prepared = restrict_to_collection(std::move(prepared));
    if (prepared.empty()) return {};
    if (!rm3) return rank_candidates(index, prepared, scorer, k, params);

    const Ranking first_pass = rank_candidates(index, prepared, scorer, params.rm3_fb_docs, params);
    const WeightedQuery expanded = restrict_to_collection(rm3_expand(index, prepared, first_pass, params));
    return rank_candidates(index, expanded, scorer, k, params);
}

}  // namespace clir
