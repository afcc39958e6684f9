#include "clir/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <unordered_set>

#include "clir/error.hpp"
#include "clir/text_format.hpp"

namespace clir {
namespace {

double gain(int grade) { return grade > 0 ? std::exp2(static_cast<double>(grade)) - 1.0 : 0.0; }

std::size_t relevant_count(const std::map<std::string, int>& judgments) {
    return static_cast<std::size_t>(std::count_if(judgments.begin(), judgments.end(),
                                                  [](const auto& j) { return j.second > 0; }));
}

}  // namespace

double ndcg_at_k(std::span<const std::string> ranked, const std::map<std::string, int>& judgments, std::size_t k) {
    if (k < 1) throw ValidationError("nDCG depth must be >= 1");
    double dcg = 0.0;
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
        auto it = judgments.find(ranked[i]);
        if (it != judgments.end()) dcg += gain(it->second) / std::log2(static_cast<double>(i) + 2.0);
    }
    std::vector<int> grades;
    for (const auto& [doc, grade] : judgments) {
        if (grade > 0) grades.push_back(grade);
    }
    std::sort(grades.begin(), grades.end(), std::greater<>());
    double ideal = 0.0;
    for (std::size_t i = 0; i < grades.size() && i < k; ++i) {
        ideal += gain(grades[i]) / std::log2(static_cast<double>(i) + 2.0);
    }
    return ideal > 0.0 ? dcg / ideal : 0.0;
}

double recall_at_k(std::span<const std::string> ranked, const std::map<std::string, int>& judgments, std::size_t k) {
    if (k < 1) throw ValidationError("recall depth must be >= 1");
    const std::size_t relevant = relevant_count(judgments);
    if (relevant == 0) return 0.0;
    std::size_t found = 0;
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
        auto it = judgments.find(ranked[i]);
        if (it != judgments.end() && it->second > 0) ++found;
    }
    return static_cast<double>(found) / static_cast<double>(relevant);
}

void validate_run(std::span<const RunEntry> entries) {
    struct State {
        std::size_t last_rank = 0;
        double last_score = 0.0;
        std::unordered_set<std::string> docs;
    };
    std::map<std::string, State> topics;
    for (const auto& e : entries) {
        auto& state = topics[e.topic_id];
        if (e.rank != state.last_rank + 1) {
            throw ValidationError("topic " + e.topic_id + ": rank " + std::to_string(e.rank) + " follows rank " +
                                  std::to_string(state.last_rank));
        }
        if (state.last_rank > 0 && e.score > state.last_score) {
            throw ValidationError("topic " + e.topic_id + ": score increases at rank " + std::to_string(e.rank));
        }
        if (!state.docs.insert(e.doc_id).second) {
            throw ValidationError("topic " + e.topic_id + ": document " + e.doc_id + " ranked twice");
        }
        if (!std::isfinite(e.score)) throw ValidationError("topic " + e.topic_id + ": non-finite score");
        state.last_rank = e.rank;
        state.last_score = e.score;
    }
}

std::string format_run_line(const RunEntry& e) {
    std::string line;
    line.reserve(e.topic_id.size() + e.doc_id.size() + e.run_tag.size() + 40);
    line += e.topic_id;
    line += " Q0 ";
    line += e.doc_id;
    line += ' ';
    line += std::to_string(e.rank);
    line += ' ';
    line += format_double(e.score);
    line += ' ';
    line += e.run_tag;
    return line;
}

void write_run(const std::filesystem::path& path, std::span<const RunEntry> entries) {
    validate_run(entries);
    for (const auto& e : entries) {
        for (const auto* field : {&e.topic_id, &e.doc_id, &e.run_tag}) {
            if (field->empty() || field->find_first_of(" \t\r\n") != std::string::npos) {
                throw ValidationError("run field '" + *field + "' is empty or contains whitespace");
            }
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& e : entries) out << format_run_line(e) << '\n';
    if (!out) throw Error("write failed for " + path.string());
}

std::vector<RunEntry> read_run(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<RunEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = split_whitespace(line);
        if (fields.empty()) continue;
        if (fields.size() != 6) {
            throw ParseError(path.string(), line_no, "expected 6 fields, found " + std::to_string(fields.size()));
        }
        auto rank = parse_int(fields[3]);
        auto score = parse_double(fields[4]);
        if (!rank || *rank < 1) throw ParseError(path.string(), line_no, "bad rank '" + std::string(fields[3]) + "'");
        if (!score) throw ParseError(path.string(), line_no, "bad score '" + std::string(fields[4]) + "'");
        entries.push_back({std::string(fields[0]), std::string(fields[2]), static_cast<std::size_t>(*rank), *score,
                           std::string(fields[5])});
    }
    try {
        validate_run(entries);
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return entries;
}

std::vector<RunEntry> to_run_entries(const std::string& topic_id, const Ranking& ranking, const std::string& tag) {
    std::vector<RunEntry> entries;
    entries.reserve(ranking.size());
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        entries.push_back({topic_id, ranking[i].id, i + 1, ranking[i].score, tag});
    }
    return entries;
}

std::map<std::string, Ranking> run_by_topic(std::span<const RunEntry> entries) {
    std::map<std::string, std::vector<const RunEntry*>> grouped;
    for (const auto& e : entries) grouped[e.topic_id].push_back(&e);
    std::map<std::string, Ranking> out;
    for (auto& [topic, list] : grouped) {
        std::stable_sort(list.begin(), list.end(), [](const RunEntry* a, const RunEntry* b) { return a->rank < b->rank; });
        auto& ranking = out[topic];
        for (const auto* e : list) ranking.push_back({e->doc_id, e->score});
    }
    return out;
}

Qrels read_qrels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    Qrels qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = split_whitespace(line);
        if (fields.empty()) continue;
        if (fields.size() != 4) {
            throw ParseError(path.string(), line_no, "expected 4 fields, found " + std::to_string(fields.size()));
        }
        auto grade = parse_int(fields[3]);
        if (!grade) throw ParseError(path.string(), line_no, "bad grade '" + std::string(fields[3]) + "'");
        if (*grade < 0) throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": negative grade");
        qrels[std::string(fields[0])][std::string(fields[2])] = static_cast<int>(*grade);
    }
    return qrels;
}

EvalReport evaluate(std::span<const RunEntry> run, const Qrels& qrels, std::size_t ndcg_depth,
                    std::size_t recall_depth) {
    EvalReport report;
    for (const auto& [topic, ranking] : run_by_topic(run)) {
        auto judged = qrels.find(topic);
        if (judged == qrels.end()) {
            report.unjudged_topics.push_back(topic);
            continue;
        }
        if (relevant_count(judged->second) == 0) {
            report.no_relevant_topics.push_back(topic);
            continue;
        }
        std::vector<std::string> docs;
        docs.reserve(ranking.size());
        for (const auto& e : ranking) docs.push_back(e.id);
        report.topics.push_back({topic, ndcg_at_k(docs, judged->second, ndcg_depth),
                                 recall_at_k(docs, judged->second, recall_depth)});
    }
    for (const auto& t : report.topics) {
        report.mean_ndcg += t.ndcg;
        report.mean_recall += t.recall;
    }
    if (!report.topics.empty()) {
        report.mean_ndcg /= static_cast<double>(report.topics.size());
        report.mean_recall /= static_cast<double>(report.topics.size());
    }
    return report;
}

EvalReport evaluate(const std::filesystem::path& run_path, const std::filesystem::path& qrels_path) {
    const auto run = read_run(run_path);
    const auto qrels = read_qrels(qrels_path);
    return evaluate(run, qrels);
}

std::string format_report(const EvalReport& report, std::size_t ndcg_depth, std::size_t recall_depth) {
    std::ostringstream out;
    char buf[64];
    out << "topic\tndcg@" << ndcg_depth << "\trecall@" << recall_depth << '\n';
    for (const auto& t : report.topics) {
        std::snprintf(buf, sizeof buf, "\t%.4f\t%.4f\n", t.ndcg, t.recall);
        out << t.topic_id << buf;
    }
    std::snprintf(buf, sizeof buf, "\t%.4f\t%.4f\n", report.mean_ndcg, report.mean_recall);
    out << "all" << buf;
    for (const auto& t : report.unjudged_topics) out << "# unjudged topic\t" << t << '\n';
    for (const auto& t : report.no_relevant_topics) out << "# no relevant documents\t" << t << '\n';
    return out.str();
}

}  // namespace clir
