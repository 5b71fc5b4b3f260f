#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace swid {

// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class UnknownNodeError : public Error {
public:
    explicit UnknownNodeError(const std::string& name)
        : Error("unknown node: " + name), node(name) {}
    std::string node;
};

class DuplicateNodeError : public Error {
public:
    explicit DuplicateNodeError(const std::string& name)
        : Error("duplicate node: " + name), node(name) {}
    std::string node;
};

// Carries one witness cycle as a node sequence, first node repeated at the end.
class CycleError : public Error {
public:
    explicit CycleError(std::vector<std::string> cycle_nodes)
        : Error(describe(cycle_nodes)), cycle(std::move(cycle_nodes)) {}
    std::vector<std::string> cycle;

private:
    static std::string describe(const std::vector<std::string>& c) {
        std::string s = "cycle detected: ";
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (i) s += " -> ";
            s += c[i];
        }
        return s;
    }
};

class OverlappingSetsError : public Error {
public:
    explicit OverlappingSetsError(const std::string& name)
        : Error("query sets overlap on: " + name), node(name) {}
    std::string node;
};

class RegimeOrderError : public Error {
public:
    RegimeOrderError(const std::string& earlier, const std::string& later)
        : Error("regime order contradicts topological order: step on " + earlier +
                " precedes step on its ancestor " + later) {}
};

class NoDesignatedOutcomeError : public Error {
public:
    explicit NoDesignatedOutcomeError(const std::string& why)
        : Error("no designated outcome: " + why) {}
};

class UnknownVariableError : public Error {
public:
    explicit UnknownVariableError(const std::string& name)
        : Error("unknown variable: " + name), variable(name) {}
    std::string variable;
};

// Conditioning event has zero probability mass; callers translate this into a
// positivity diagnostic where appropriate.
class ZeroConditioningMassError : public Error {
public:
    explicit ZeroConditioningMassError(const std::string& event_text)
        : Error("conditioning event has zero mass: " + event_text) {}
};

class SizeLimitError : public Error {
public:
    explicit SizeLimitError(const std::string& what) : Error(what) {}
};

class InfeasibleFloorError : public Error {
public:
    explicit InfeasibleFloorError(const std::string& what) : Error(what) {}
};

class DistributionError : public Error {
public:
    explicit DistributionError(const std::string& what) : Error(what) {}
};

class UnknownScenarioError : public Error {
public:
    explicit UnknownScenarioError(const std::string& name)
        : Error("unknown scenario: " + name) {}
};

class EmptyCellError : public Error {
public:
    explicit EmptyCellError(const std::string& cell_text)
        : Error("empty cell in dataset: " + cell_text), cell(cell_text) {}
    std::string cell;
};

class UnboundSymbolError : public Error {
public:
    explicit UnboundSymbolError(const std::string& symbol)
        : Error("unbound regime symbol: " + symbol), symbol_name(symbol) {}
    std::string symbol_name;
};

// Location-carrying errors for the model-file front end.
class SyntaxError : public Error {
public:
    SyntaxError(int line, int column, const std::string& message)
        : Error("syntax error at " + std::to_string(line) + ":" + std::to_string(column) +
                ": " + message),
          line(line),
          column(column) {}
    int line;
    int column;
};

class SemanticError : public Error {
public:
    explicit SemanticError(const std::string& message) : Error("semantic error: " + message) {}
    SemanticError(int line, int column, const std::string& message)
        : Error("semantic error at " + std::to_string(line) + ":" + std::to_string(column) +
                ": " + message),
          line(line),
          column(column) {}
    int line = 0;
    int column = 0;
};

}  // namespace swid
