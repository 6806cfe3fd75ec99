#include <cctype>
#include <fstream>
#include <sstream>

#include "netmark/netlist.hpp"

namespace netmark {
namespace {

bool is_name_char(char c) {
  return !std::isspace(static_cast<unsigned char>(c)) && c != '(' && c != ')' && c != ',' && c != '=' && c != '#';
}

// Cursor over one line with 1-based column reporting.
class LineLexer {
 public:
  LineLexer(std::string_view line, std::size_t line_no) : line_(line), line_no_(line_no) {}

  void skip_space() {
    while (pos_ < line_.size() && std::isspace(static_cast<unsigned char>(line_[pos_]))) ++pos_;
  }
  bool at_end() {
    skip_space();
    return pos_ >= line_.size() || line_[pos_] == '#';
  }
  bool peek(char c) {
    skip_space();
    return pos_ < line_.size() && line_[pos_] == c;
  }
  void expect(char c) {
    if (!peek(c)) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  std::string_view name() {
    skip_space();
    std::size_t start = pos_;
    while (pos_ < line_.size() && is_name_char(line_[pos_])) ++pos_;
    if (start == pos_) fail("expected identifier");
    return line_.substr(start, pos_ - start);
  }
  std::size_t column() const { return pos_ + 1; }
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(line_no_, pos_ + 1, what); }
  [[noreturn]] void fail_at(std::size_t column, const std::string& what) const {
    throw ParseError(line_no_, column, what);
  }

 private:
  std::string_view line_;
  std::size_t line_no_;
  std::size_t pos_ = 0;
};

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

class BenchReader {
 public:
  NetId intern(std::string_view name) {
    auto [it, inserted] = ids_.try_emplace(std::string(name), NetId(parts_.net_names.size()));
    if (inserted) parts_.net_names.emplace_back(name);
    return it->second;
  }

  void read_line(std::string_view line, std::size_t line_no) {
    LineLexer lex(line, line_no);
    if (lex.at_end()) return;
    std::size_t head_col = lex.column();
    std::string_view head = lex.name();
    if (lex.peek('(')) {
      std::string kw = upper(head);
      if (kw != "INPUT" && kw != "OUTPUT") lex.fail_at(head_col, "unknown declaration '" + std::string(head) + "'");
      lex.expect('(');
      NetId id = intern(lex.name());
      lex.expect(')');
      if (!lex.at_end()) lex.fail("unexpected trailing text");
      (kw == "INPUT" ? parts_.primary_inputs : parts_.primary_outputs).push_back(id);
      return;
    }
    NetId out = intern(head);
    lex.expect('=');
    lex.skip_space();
    const std::size_t fn_col = lex.column();
    std::string_view fn = lex.name();
    lex.expect('(');
    std::vector<NetId> args;
    if (!lex.peek(')')) {
      args.push_back(intern(lex.name()));
      while (lex.peek(',')) {
        lex.expect(',');
        args.push_back(intern(lex.name()));
      }
    }
    lex.expect(')');
    if (!lex.at_end()) lex.fail("unexpected trailing text");

    if (upper(fn) == "DFF") {
      if (args.size() != 1) lex.fail_at(fn_col, "DFF takes exactly one input");
      parts_.state_elements.push_back(StateElement{args[0], out});
      return;
    }
    auto f = parse_gate_function(fn);
    if (!f) lex.fail_at(fn_col, "unknown function '" + std::string(fn) + "'");
    if (!arity_ok(*f, args.size())) {
      lex.fail_at(fn_col, std::string(bench_token(*f)) + " with " + std::to_string(args.size()) + " inputs");
    }
    parts_.gates.push_back(Gate{out, *f, std::move(args)});
  }

  NetlistParts take(std::string name) {
    parts_.name = std::move(name);
    return std::move(parts_);
  }

 private:
  NetlistParts parts_;
  std::unordered_map<std::string, NetId> ids_;
};

}  // namespace

Netlist parse_bench(std::string_view text, std::string name) {
  BenchReader reader;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    reader.read_line(line, ++line_no);
    start = end + 1;
  }
  return Netlist(reader.take(std::move(name)));
}

Netlist read_bench_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NetlistError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_bench(buf.str(), path.stem().string());
}

std::string serialize_bench(const Netlist& netlist, bool include_name) {
  std::string out;
  out.reserve(netlist.net_count() * 24);
  if (include_name && !netlist.name().empty()) out += "# " + netlist.name() + "\n";
  for (NetId id : netlist.primary_inputs()) out += "INPUT(" + netlist.net_name(id) + ")\n";
  out += "\n";
  for (NetId id : netlist.primary_outputs()) out += "OUTPUT(" + netlist.net_name(id) + ")\n";
  out += "\n";
  for (const StateElement& s : netlist.state_elements()) {
    out += netlist.net_name(s.q) + " = DFF(" + netlist.net_name(s.d) + ")\n";
  }
  for (const Gate& g : netlist.gates()) {
    out += netlist.net_name(g.output);
    out += " = ";
    out += bench_token(g.function);
    out += "(";
    for (std::size_t i = 0; i < g.inputs.size(); ++i) {
      if (i) out += ", ";
      out += netlist.net_name(g.inputs[i]);
    }
    out += ")\n";
  }
  return out;
}

void write_bench_file(const Netlist& netlist, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NetlistError("cannot write '" + path.string() + "'");
  out << serialize_bench(netlist);
  if (!out) throw NetlistError("write failed for '" + path.string() + "'");
}

}  // namespace netmark
