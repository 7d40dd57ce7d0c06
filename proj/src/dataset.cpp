#include "cfn/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace cfn {

Task task_from_name(const std::string& name) {
    if (name == "sudoku") return Task::Sudoku;
    if (name == "futoshiki") return Task::Futoshiki;
    if (name == "mincut") return Task::MinCut;
    if (name == "maxcut") return Task::MaxCut;
    throw std::invalid_argument("unknown task: " + name +
                                " (expected sudoku, futoshiki, mincut or maxcut)");
}

std::string task_name(Task t) {
    switch (t) {
        case Task::Sudoku: return "sudoku";
        case Task::Futoshiki: return "futoshiki";
        case Task::MinCut: return "mincut";
        case Task::MaxCut: return "maxcut";
    }
    return "?";
}

bool is_cut_task(Task t) { return t == Task::MinCut || t == Task::MaxCut; }

Assignment Sample::hints(Task task) const {
    switch (task) {
        case Task::Sudoku:
            return parse_grid81(puzzle);
        case Task::Futoshiki:
            return Assignment(std::size_t(size) * std::size_t(size), kUnset);
        case Task::MinCut:
        case Task::MaxCut: {
            int n = 0;
            for (const auto& e : edges) n = std::max({n, e[0] + 1, e[1] + 1});
            Assignment h(std::size_t(n), kUnset);
            h[std::size_t(source)] = 0;
            h[std::size_t(sink)] = 1;
            return h;
        }
    }
    return {};
}

Assignment parse_grid81(const std::string& s) {
    if (s.size() != 81) throw std::invalid_argument("grid string must have 81 characters");
    Assignment y(81, kUnset);
    for (std::size_t i = 0; i < 81; ++i) {
        const char c = s[i];
        if (c == '0' || c == '.') continue;
        if (c < '1' || c > '9') throw std::invalid_argument("grid string has invalid character");
        y[i] = c - '1';
    }
    return y;
}

std::string format_grid81(const Assignment& y) {
    if (y.size() != 81) throw std::invalid_argument("grid assignment must have 81 cells");
    std::string s(81, '0');
    for (std::size_t i = 0; i < 81; ++i)
        if (y[i] != kUnset) s[i] = char('1' + y[i]);
    return s;
}

namespace {

nlohmann::json sample_to_json(const Dataset& ds, const Sample& s) {
    nlohmann::json j;
    switch (ds.task) {
        case Task::Sudoku: {
            j["puzzle"] = s.puzzle;
            j["solution"] = format_grid81(s.solution);
            if (!s.solutions.empty()) {
                nlohmann::json arr = nlohmann::json::array();
                for (const auto& sol : s.solutions) arr.push_back(format_grid81(sol));
                j["solutions"] = std::move(arr);
            }
            break;
        }
        case Task::Futoshiki: {
            j["size"] = s.size;
            nlohmann::json ineqs = nlohmann::json::array();
            for (const auto& q : s.inequalities) ineqs.push_back({q.a, q.b, q.dir});
            j["inequalities"] = std::move(ineqs);
            nlohmann::json sol = nlohmann::json::array();
            for (int v : s.solution) sol.push_back(v + 1);  // digits
            j["solution"] = std::move(sol);
            break;
        }
        case Task::MinCut:
        case Task::MaxCut: {
            j["mode"] = ds.task == Task::MinCut ? "min" : "max";
            j["source"] = s.source;
            j["sink"] = s.sink;
            nlohmann::json edges = nlohmann::json::array();
            for (const auto& e : s.edges) edges.push_back({e[0], e[1], e[2]});
            j["edges"] = std::move(edges);
            j["capacities"] = s.capacities;
            j["solution"] = s.solution;  // bits
            break;
        }
    }
    return j;
}

Sample sample_from_json(Task task, const nlohmann::json& j, int line_no) {
    Sample s;
    try {
        switch (task) {
            case Task::Sudoku: {
                s.puzzle = j.at("puzzle").get<std::string>();
                parse_grid81(s.puzzle);  // validates
                s.solution = parse_grid81(j.at("solution").get<std::string>());
                for (int v : s.solution)
                    if (v == kUnset)
                        throw std::invalid_argument("solution grid has empty cells");
                if (j.contains("solutions"))
                    for (const auto& e : j.at("solutions"))
                        s.solutions.push_back(parse_grid81(e.get<std::string>()));
                break;
            }
            case Task::Futoshiki: {
                s.size = j.at("size").get<int>();
                if (s.size <= 0) throw std::invalid_argument("size must be positive");
                const int cells = s.size * s.size;
                for (const auto& e : j.at("inequalities")) {
                    Sample::Ineq q{e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<int>()};
                    if (q.a < 0 || q.a >= cells || q.b < 0 || q.b >= cells ||
                        (q.dir != 1 && q.dir != -1))
                        throw std::invalid_argument("bad inequality entry");
                    s.inequalities.push_back(q);
                }
                for (const auto& e : j.at("solution")) {
                    const int digit = e.get<int>();
                    if (digit < 1 || digit > s.size)
                        throw std::invalid_argument("solution digit out of range");
                    s.solution.push_back(digit - 1);
                }
                if (int(s.solution.size()) != cells)
                    throw std::invalid_argument("solution length mismatch");
                break;
            }
            case Task::MinCut:
            case Task::MaxCut: {
                const std::string mode = j.at("mode").get<std::string>();
                if (mode != (task == Task::MinCut ? "min" : "max"))
                    throw std::invalid_argument("sample mode does not match dataset task");
                s.source = j.at("source").get<int>();
                s.sink = j.at("sink").get<int>();
                for (const auto& e : j.at("edges"))
                    s.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<int>()});
                s.capacities = j.at("capacities").get<std::vector<double>>();
                if (s.capacities.size() != s.edges.size())
                    throw std::invalid_argument("capacities length must match edges");
                s.solution = j.at("solution").get<Assignment>();
                for (int v : s.solution)
                    if (v != 0 && v != 1) throw std::invalid_argument("cut solution must be bits");
                break;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("dataset line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
    return s;
}

}  // namespace

Dataset load_dataset(const std::string& path, Task task) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("dataset: cannot open: " + path);
    Dataset ds;
    ds.task = task;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument("dataset line " + std::to_string(line_no) +
                                        ": malformed json: " + e.what());
        }
        ds.samples.push_back(sample_from_json(task, j, line_no));
    }
    return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dataset: cannot open for writing: " + path);
    for (const auto& s : ds.samples) out << sample_to_json(ds, s).dump() << '\n';
}

}  // namespace cfn
