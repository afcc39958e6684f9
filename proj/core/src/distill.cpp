#include "clir/distill.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "clir/error.hpp"

namespace clir {

void DistillPair::validate() const {
    if (passages.size() < 2) throw ValidationError("query " + query_id + " needs at least two passages");
    if (student && student->size() != passages.size()) {
        throw ValidationError("query " + query_id + " has misaligned student scores");
    }
}

std::vector<std::string> mine_hard_passages(const DenseIndex& index, MatrixView query, std::size_t k,
                                            const DenseIndexParams& params) {
    if (k < 1) throw ValidationError("k must be >= 1");
    const Ranking ranking = search_dense(index, query, params);
    std::vector<std::string> keys;
    for (std::size_t i = 0; i < ranking.size() && i < k; ++i) keys.push_back(ranking[i].id);
    return keys;
}

std::vector<double> softmax(std::span<const double> scores, double temperature) {
    if (!(temperature > 0.0)) throw ValidationError("temperature must be positive");
    std::vector<double> out(scores.size());
    if (scores.empty()) return out;
    double hi = scores[0] / temperature;
    for (double s : scores) hi = std::max(hi, s / temperature);
    double z = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::exp(scores[i] / temperature - hi);
        z += out[i];
    }
    for (double& p : out) p /= z;
    return out;
}

double distill_loss(std::span<const double> teacher, std::span<const double> student, double temperature) {
    if (teacher.size() != student.size()) {
        throw ValidationError("teacher and student lists differ in length (" + std::to_string(teacher.size()) +
                              " vs " + std::to_string(student.size()) + ")");
    }
    if (teacher.size() < 2) throw ValidationError("distillation needs at least two scores per query");
    for (std::size_t i = 0; i < teacher.size(); ++i) {
        if (!std::isfinite(teacher[i]) || !std::isfinite(student[i])) throw ValidationError("non-finite score");
    }
    // log-softmax directly so tiny probabilities do not lose precision.
    auto log_softmax = [&](std::span<const double> s) {
        double hi = s[0] / temperature;
        for (double v : s) hi = std::max(hi, v / temperature);
        double z = 0.0;
        for (double v : s) z += std::exp(v / temperature - hi);
        const double log_z = hi + std::log(z);
        std::vector<double> out(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] / temperature - log_z;
        return out;
    };
    if (!(temperature > 0.0)) throw ValidationError("temperature must be positive");
    const auto log_p = log_softmax(teacher);
    const auto log_q = log_softmax(student);
    double kl = 0.0;
    for (std::size_t i = 0; i < log_p.size(); ++i) kl += std::exp(log_p[i]) * (log_p[i] - log_q[i]);
    return std::max(kl, 0.0);
}

void write_distill_file(const std::filesystem::path& path, std::span<const DistillPair> pairs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& pair : pairs) {
        pair.validate();
        nlohmann::ordered_json j;
        j["query_id"] = pair.query_id;
        auto& passages = j["passages"] = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < pair.passages.size(); ++i) {
            nlohmann::ordered_json p;
            p["pid"] = pair.passages[i].passage_key;
            p["teacher"] = pair.passages[i].teacher;
            if (pair.student) p["student"] = (*pair.student)[i];
            passages.push_back(std::move(p));
        }
        out << j.dump() << '\n';
    }
    if (!out) throw Error("write failed for " + path.string());
}

std::vector<DistillPair> read_distill_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<DistillPair> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            DistillPair pair;
            pair.query_id = j.at("query_id").get<std::string>();
            std::vector<double> student;
            for (const auto& p : j.at("passages")) {
                pair.passages.push_back({p.at("pid").get<std::string>(), p.at("teacher").get<double>()});
                if (p.contains("student")) student.push_back(p["student"].get<double>());
            }
            if (!student.empty()) pair.student = std::move(student);
            pair.validate();
            pairs.push_back(std::move(pair));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
    }
    return pairs;
}

}  // namespace clir
