#include "fedprf/eval.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fedprf {

Qrels Qrels::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open qrels: " + path);
    return parse(in, path);
}

Qrels Qrels::parse(std::istream& in, const std::string& name) {
    Qrels qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ss(line);
        std::string topic, iteration, doc;
        int grade = 0;
        if (!(ss >> topic >> iteration >> doc >> grade)) {
            throw std::runtime_error("malformed qrels line at " + name + ":" +
                                     std::to_string(line_no));
        }
        qrels.add(topic, doc, grade);
    }
    return qrels;
}

void Qrels::add(const std::string& topic, const std::string& doc, int grade) {
    if (grade < 0 || grade > 2) {
        throw std::runtime_error("qrels grade out of range for topic " + topic + ", doc " + doc);
    }
    grades_[topic][doc] = grade;
}

int Qrels::grade(const std::string& topic, const std::string& doc) const {
    auto it = grades_.find(topic);
    if (it == grades_.end()) return 0;
    auto doc_it = it->second.find(doc);
    return doc_it == it->second.end() ? 0 : doc_it->second;
}

std::size_t Qrels::relevant_count(const std::string& topic) const {
    auto it = grades_.find(topic);
    if (it == grades_.end()) return 0;
    std::size_t count = 0;
    for (const auto& [_, grade] : it->second) {
        if (grade >= 1) ++count;
    }
    return count;
}

std::vector<int> Qrels::judged_grades(const std::string& topic) const {
    std::vector<int> grades;
    auto it = grades_.find(topic);
    if (it == grades_.end()) return grades;
    grades.reserve(it->second.size());
    for (const auto& [_, grade] : it->second) grades.push_back(grade);
    return grades;
}

std::vector<std::string> Qrels::topics() const {
    std::vector<std::string> out;
    out.reserve(grades_.size());
    for (const auto& [topic, _] : grades_) out.push_back(topic);
    return out;
}

std::vector<Topic> load_topics(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open topics: " + path);
    std::vector<Topic> topics;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        const std::string where = path + ":" + std::to_string(line_no);
        if (j.is_discarded() || !j.is_object()) {
            throw std::runtime_error("malformed topic line at " + where);
        }
        Topic topic;
        if (j.at("id").is_string()) {
            topic.id = j["id"].get<std::string>();
        } else {
            topic.id = std::to_string(j.at("id").get<std::int64_t>());
        }
        topic.query = j.at("query").get<std::string>();
        if (!j.contains("timestamp") || !j["timestamp"].is_number_integer()) {
            throw std::runtime_error("topic missing integer timestamp at " + where);
        }
        topic.timestamp = j["timestamp"].get<std::int64_t>();
        topics.push_back(std::move(topic));
    }
    return topics;
}

void write_run_file(const std::string& path, std::span<const RunRow> rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write run file: " + path);
    out.precision(17);
    for (const auto& r : rows) {
        out << r.topic << " Q0 " << r.doc << ' ' << r.rank << ' ' << r.score << ' ' << r.tag
            << '\n';
    }
    if (!out) throw std::runtime_error("short write to run file: " + path);
}

std::vector<RunRow> parse_run_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open run file: " + path);
    std::vector<RunRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ss(line);
        RunRow row;
        std::string q0;
        if (!(ss >> row.topic >> q0 >> row.doc >> row.rank >> row.score >> row.tag)) {
            throw std::runtime_error("malformed run line at " + path + ":" +
                                     std::to_string(line_no));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

void require_topic(const Qrels& qrels, const std::string& topic) {
    if (!qrels.has_topic(topic)) throw std::runtime_error("unknown topic: " + topic);
}

}  // namespace

double average_precision(std::span<const std::string> ranking, const Qrels& qrels,
                         const std::string& topic, std::size_t depth) {
    require_topic(qrels, topic);
    const std::size_t total_relevant = qrels.relevant_count(topic);
    if (total_relevant == 0) return 0.0;
    double sum = 0.0;
    std::size_t hits = 0;
    const std::size_t limit = std::min(depth, ranking.size());
    for (std::size_t i = 0; i < limit; ++i) {
        if (qrels.grade(topic, ranking[i]) >= 1) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(total_relevant);
}

double ndcg_at_k(std::span<const std::string> ranking, const Qrels& qrels,
                 const std::string& topic, std::size_t k) {
    require_topic(qrels, topic);
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    double dcg = 0.0;
    const std::size_t limit = std::min(k, ranking.size());
    for (std::size_t i = 0; i < limit; ++i) {
        const int grade = qrels.grade(topic, ranking[i]);
        if (grade > 0) {
            dcg += (std::pow(2.0, grade) - 1.0) / std::log2(static_cast<double>(i + 2));
        }
    }
    auto grades = qrels.judged_grades(topic);
    std::sort(grades.begin(), grades.end(), std::greater<>());
    double ideal = 0.0;
    for (std::size_t i = 0; i < grades.size() && i < k; ++i) {
        if (grades[i] > 0) {
            ideal += (std::pow(2.0, grades[i]) - 1.0) / std::log2(static_cast<double>(i + 2));
        }
    }
    return ideal == 0.0 ? 0.0 : dcg / ideal;
}

double recall_at_depth(std::span<const std::string> ranking, const Qrels& qrels,
                       const std::string& topic, std::size_t depth) {
    require_topic(qrels, topic);
    const std::size_t total_relevant = qrels.relevant_count(topic);
    if (total_relevant == 0) return 0.0;
    std::size_t hits = 0;
    const std::size_t limit = std::min(depth, ranking.size());
    for (std::size_t i = 0; i < limit; ++i) {
        if (qrels.grade(topic, ranking[i]) >= 1) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(total_relevant);
}

}  // namespace fedprf
