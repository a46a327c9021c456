#include "bad/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include "bad/error.hpp"

namespace bad {

std::string_view to_string(PredicateClass c) {
  switch (c) {
    case PredicateClass::Fixed: return "FIXED";
    case PredicateClass::Parameterized: return "PARAMETERIZED";
    case PredicateClass::Join: return "JOIN";
    case PredicateClass::Freshness: return "FRESHNESS";
  }
  return "?";
}

const std::string& PredicateAtom::alias() const {
  if (auto* n = std::get_if<IsNew>(&expr)) return n->alias;
  if (auto* c = std::get_if<Comparison>(&expr)) return std::get<FieldRef>(c->lhs).alias;
  return std::get<FieldRef>(std::get<SpatialDistance>(expr).a).alias;
}

const DatasetBinding* ChannelDefinition::binding(std::string_view alias) const {
  for (const auto& b : datasets) {
    if (b.alias == alias) return &b;
  }
  return nullptr;
}

namespace {

enum class Tok { Ident, QuotedIdent, String, Int, Double, Symbol, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;  // identifier, unescaped string, or symbol
  std::int64_t i = 0;
  double d = 0;
  std::size_t pos = 0;
};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

bool is_word_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_word(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t;
      t.pos = pos_;
      if (pos_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (is_word_start(c)) {
        auto start = pos_;
        while (pos_ < src_.size() && is_word(src_[pos_])) ++pos_;
        t.kind = Tok::Ident;
        t.text = std::string(src_.substr(start, pos_ - start));
      } else if (c == '`') {
        auto end = src_.find('`', pos_ + 1);
        if (end == std::string_view::npos) throw SyntaxError(pos_, "closing '`'", "end of input");
        t.kind = Tok::QuotedIdent;
        t.text = std::string(src_.substr(pos_ + 1, end - pos_ - 1));
        pos_ = end + 1;
      } else if (c == '"') {
        t.kind = Tok::String;
        t.text = lex_string();
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        lex_number(t);
      } else if ((c == '<' || c == '>') && pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
        t.kind = Tok::Symbol;
        t.text = std::string(src_.substr(pos_, 2));
        pos_ += 2;
      } else if (std::string_view("(){},;.=<>-*").find(c) != std::string_view::npos) {
        t.kind = Tok::Symbol;
        t.text = std::string(1, c);
        ++pos_;
      } else {
        throw SyntaxError(pos_, "token", std::string("'") + c + "'");
      }
      out.push_back(std::move(t));
    }
  }

 private:
  void skip_space() {
    while (pos_ < src_.size()) {
      if (std::isspace(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
      } else if (src_.substr(pos_, 2) == "//") {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else {
        return;
      }
    }
  }

  std::string lex_string() {
    std::string out;
    auto start = pos_++;
    while (pos_ < src_.size()) {
      char c = src_[pos_++];
      if (c == '"') return out;
      if (c == '\\') {
        if (pos_ >= src_.size()) break;
        char e = src_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: throw SyntaxError(pos_ - 1, "escape sequence", std::string("'\\") + e + "'");
        }
      } else {
        out += c;
      }
    }
    throw SyntaxError(start, "closing '\"'", "end of input");
  }

  void lex_number(Token& t) {
    auto start = pos_;
    bool floating = false;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (pos_ + 1 < src_.size() && src_[pos_] == '.' && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
      floating = true;
      ++pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      auto save = pos_++;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        floating = true;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      } else {
        pos_ = save;
      }
    }
    auto text = src_.substr(start, pos_ - start);
    if (floating) {
      t.kind = Tok::Double;
      std::from_chars(text.data(), text.data() + text.size(), t.d);
    } else {
      t.kind = Tok::Int;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), t.i);
      if (ec != std::errc()) throw SyntaxError(start, "64-bit integer", std::string(text));
    }
    t.text = std::string(text);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::End: return "end of input";
    case Tok::String: return "string \"" + t.text + "\"";
    default: return "'" + t.text + "'";
  }
}

class Parser {
 public:
  explicit Parser(std::string_view text) : toks_(Lexer(text).run()) {}

  ChannelDefinition channel() {
    ChannelDefinition def;
    expect_kw("CREATE");
    expect_kw("CONTINUOUS");
    if (is_kw("PULL")) throw Error(ErrorKind::UnsupportedFeature, "pull channels are not supported");
    expect_kw("PUSH");
    expect_kw("CHANNEL");
    def.name = ident("channel name");
    expect("(");
    if (!is_sym(")")) {
      do {
        def.params.push_back(ident("parameter name"));
      } while (accept(","));
    }
    expect(")");
    params_ = {def.params.begin(), def.params.end()};
    if (params_.size() != def.params.size()) throw Error(ErrorKind::InvalidChannel, "duplicate parameter name");
    expect_kw("PERIOD");
    expect_kw("duration");
    expect("(");
    auto& dur = peek();
    if (dur.kind != Tok::String) fail("duration string");
    try {
      def.period = parse_iso_duration(dur.text);
    } catch (const Error&) {
      throw SyntaxError(dur.pos, "ISO-8601 duration", describe(dur));
    }
    ++at_;
    expect(")");
    expect("{");
    select(def);
    expect("}");
    accept(";");
    if (peek().kind != Tok::End) fail("end of statement");
    validate(def);
    return def;
  }

  SubscribeStatement subscribe() {
    SubscribeStatement s;
    expect_kw("SUBSCRIBE");
    expect_kw("TO");
    s.channelName = ident("channel name");
    expect("(");
    if (!is_sym(")")) {
      do {
        auto v = literal();
        if (!v) fail("literal");
        s.argValues.push_back(std::move(*v));
      } while (accept(","));
    }
    expect(")");
    expect_kw("ON");
    s.brokerName = ident("broker name");
    accept(";");
    if (peek().kind != Tok::End) fail("end of statement");
    return s;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(at_ + ahead, toks_.size() - 1)]; }

  [[noreturn]] void fail(const std::string& expected) const { throw SyntaxError(peek().pos, expected, describe(peek())); }

  bool is_kw(std::string_view kw, std::size_t ahead = 0) const {
    const auto& t = peek(ahead);
    return t.kind == Tok::Ident && iequals(t.text, kw);
  }
  bool is_sym(std::string_view s, std::size_t ahead = 0) const {
    const auto& t = peek(ahead);
    return t.kind == Tok::Symbol && t.text == s;
  }
  void expect_kw(std::string_view kw) {
    if (!is_kw(kw)) fail(std::string(kw));
    ++at_;
  }
  void expect(std::string_view sym) {
    if (!is_sym(sym)) fail("'" + std::string(sym) + "'");
    ++at_;
  }
  bool accept(std::string_view sym) {
    if (!is_sym(sym)) return false;
    ++at_;
    return true;
  }
  std::string ident(const std::string& what) {
    const auto& t = peek();
    if (t.kind != Tok::Ident && t.kind != Tok::QuotedIdent) fail(what);
    ++at_;
    return t.text;
  }

  std::optional<Value> literal() {
    const auto& t = peek();
    bool negative = false;
    if (is_sym("-") && (peek(1).kind == Tok::Int || peek(1).kind == Tok::Double)) {
      negative = true;
      ++at_;
    }
    const auto& n = peek();
    switch (n.kind) {
      case Tok::Int: ++at_; return Value{negative ? -n.i : n.i};
      case Tok::Double: ++at_; return Value{negative ? -n.d : n.d};
      case Tok::String: ++at_; return Value{n.text};
      case Tok::Ident:
        if (iequals(n.text, "true") || iequals(n.text, "false")) {
          ++at_;
          return Value{iequals(n.text, "true")};
        }
        break;
      default: break;
    }
    if (negative) fail("number");
    (void)t;
    return std::nullopt;
  }

  void reject_unsupported_keyword() const {
    static const char* kUnsupported[] = {"OR", "NOT", "GROUP", "ORDER", "HAVING", "LIMIT", "UNION", "EXISTS", "IN"};
    for (auto* kw : kUnsupported) {
      if (is_kw(kw)) throw Error(ErrorKind::UnsupportedFeature, std::string(kw) + " is not supported in channel bodies");
    }
  }

  void select(ChannelDefinition& def) {
    expect_kw("SELECT");
    if (is_sym("*") || is_kw("VALUE") || is_kw("DISTINCT")) {
      throw Error(ErrorKind::UnsupportedFeature, "only field-path projections are supported");
    }
    do {
      def.projection.push_back(field_path());
    } while (accept(","));
    expect_kw("FROM");
    do {
      if (is_sym("(")) throw Error(ErrorKind::UnsupportedFeature, "nested SELECT is not supported");
      DatasetBinding b;
      b.dataset = ident("dataset name");
      if (is_kw("AS")) ++at_;
      if (peek().kind == Tok::QuotedIdent || (peek().kind == Tok::Ident && !is_kw("WHERE"))) {
        b.alias = ident("alias");
      } else {
        b.alias = b.dataset;
      }
      def.datasets.push_back(std::move(b));
    } while (accept(","));
    if (def.datasets.size() > 2) throw Error(ErrorKind::UnsupportedFeature, "at most two datasets per channel");
    for (const auto& b : def.datasets) {
      if (!aliases_.insert(b.alias).second) throw Error(ErrorKind::InvalidChannel, "duplicate alias " + b.alias);
    }
    for (const auto& f : def.projection) {
      if (!aliases_.count(f.alias)) throw Error(ErrorKind::InvalidChannel, "projection uses unknown alias " + f.alias);
    }
    if (is_kw("WHERE")) {
      ++at_;
      def.predicates.push_back(atom());
      reject_unsupported_keyword();
      while (is_kw("AND")) {
        ++at_;
        def.predicates.push_back(atom());
        reject_unsupported_keyword();
      }
    }
    reject_unsupported_keyword();
  }

  FieldRef field_path() {
    FieldRef f;
    f.alias = ident("alias");
    expect(".");
    f.path = ident("field name");
    while (accept(".")) f.path += "." + ident("field name");
    return f;
  }

  Operand operand() {
    if (is_sym("(")) {
      if (is_kw("SELECT", 1)) throw Error(ErrorKind::UnsupportedFeature, "nested SELECT is not supported");
      fail("operand");
    }
    if (auto v = literal()) return *v;
    const auto& t = peek();
    if (t.kind != Tok::Ident && t.kind != Tok::QuotedIdent) fail("operand");
    if (is_sym(".", 1)) {
      auto pos = t.pos;
      auto f = field_path();
      if (!aliases_.count(f.alias)) {
        throw Error(ErrorKind::UnclassifiablePredicate,
                    "unknown alias '" + f.alias + "' at offset " + std::to_string(pos));
      }
      return f;
    }
    if (is_sym("(", 1)) throw Error(ErrorKind::UnsupportedFeature, "function '" + t.text + "' is not supported");
    ++at_;
    if (!params_.count(t.text)) {
      throw Error(ErrorKind::UnclassifiablePredicate, "unknown parameter '" + t.text + "' at offset " + std::to_string(t.pos));
    }
    return ParamRef{t.text};
  }

  CompareOp compare_op() {
    static const std::pair<const char*, CompareOp> kOps[] = {
        {"=", CompareOp::Eq}, {"<", CompareOp::Lt}, {">", CompareOp::Gt}, {"<=", CompareOp::Le}, {">=", CompareOp::Ge}};
    for (auto [s, op] : kOps) {
      if (accept(s)) return op;
    }
    fail("comparison operator");
  }

  PredicateAtom atom() {
    reject_unsupported_keyword();
    if (is_kw("is_new") && is_sym("(", 1)) {
      at_ += 2;
      auto pos = peek().pos;
      IsNew n{ident("alias")};
      expect(")");
      if (!aliases_.count(n.alias)) {
        throw Error(ErrorKind::UnclassifiablePredicate, "unknown alias '" + n.alias + "' at offset " + std::to_string(pos));
      }
      return {n, PredicateClass::Freshness};
    }
    if (is_kw("spatial_distance") && is_sym("(", 1)) {
      at_ += 2;
      SpatialDistance sd;
      sd.a = operand();
      expect(",");
      sd.b = operand();
      expect(")");
      sd.op = compare_op();
      auto v = literal();
      if (!v || (type_of(*v) != ValueType::Int && type_of(*v) != ValueType::Double)) fail("numeric distance");
      sd.threshold = *v;
      return classify(std::move(sd));
    }
    Comparison c;
    c.lhs = operand();
    c.op = compare_op();
    c.rhs = operand();
    return classify(std::move(c));
  }

  static PredicateAtom classify(SpatialDistance sd) {
    auto* fa = std::get_if<FieldRef>(&sd.a);
    auto* fb = std::get_if<FieldRef>(&sd.b);
    if (!fa || !fb || fa->alias == fb->alias) {
      throw Error(ErrorKind::UnclassifiablePredicate, "spatial_distance must compare fields of two different datasets");
    }
    return {std::move(sd), PredicateClass::Join};
  }

  static PredicateAtom classify(Comparison c) {
    auto kind = [](const Operand& o) { return o.index(); };  // 0 field, 1 param, 2 literal
    auto l = kind(c.lhs), r = kind(c.rhs);
    if (l != 0 && r == 0) {
      std::swap(c.lhs, c.rhs);
      c.op = mirror(c.op);
      std::swap(l, r);
    }
    if (l != 0) throw Error(ErrorKind::UnclassifiablePredicate, "predicate references no dataset field");
    if (r == 2) return {std::move(c), PredicateClass::Fixed};
    if (r == 1) return {std::move(c), PredicateClass::Parameterized};
    if (std::get<FieldRef>(c.lhs).alias == std::get<FieldRef>(c.rhs).alias) {
      throw Error(ErrorKind::UnclassifiablePredicate, "comparison between two fields of the same dataset");
    }
    return {std::move(c), PredicateClass::Join};
  }

  void validate(const ChannelDefinition& def) const {
    if (def.period.count() <= 0) throw Error(ErrorKind::InvalidChannel, "PERIOD must be positive");
    std::set<std::string> referenced, fresh;
    for (const auto& p : def.predicates) {
      if (p.cls == PredicateClass::Parameterized) {
        referenced.insert(std::get<ParamRef>(std::get<Comparison>(p.expr).rhs).name);
      }
      if (p.cls == PredicateClass::Freshness && !fresh.insert(p.alias()).second) {
        throw Error(ErrorKind::InvalidChannel, "more than one is_new on alias " + p.alias());
      }
    }
    for (const auto& name : def.params) {
      if (!referenced.count(name)) throw Error(ErrorKind::InvalidChannel, "parameter " + name + " is never used");
    }
  }

  std::vector<Token> toks_;
  std::size_t at_ = 0;
  std::set<std::string> params_;
  std::set<std::string> aliases_;
};

bool needs_quotes(std::string_view id) {
  static const char* kReserved[] = {"SELECT", "FROM", "WHERE", "AND", "OR", "NOT", "AS", "CREATE", "CONTINUOUS",
                                    "PUSH", "PULL", "CHANNEL", "PERIOD", "SUBSCRIBE", "TO", "ON", "true", "false",
                                    "is_new", "spatial_distance", "duration", "GROUP", "ORDER", "IN", "VALUE",
                                    "HAVING", "LIMIT", "UNION", "EXISTS", "DISTINCT"};
  if (id.empty() || !is_word_start(id[0])) return true;
  if (!std::all_of(id.begin(), id.end(), is_word)) return true;
  for (auto* kw : kReserved) {
    if (iequals(id, kw)) return true;
  }
  return false;
}

std::string quote_ident(std::string_view id) {
  return needs_quotes(id) ? "`" + std::string(id) + "`" : std::string(id);
}

std::string path_text(const FieldRef& f) {
  std::string out = quote_ident(f.alias);
  std::size_t start = 0;
  while (true) {
    auto dot = f.path.find('.', start);
    out += "." + quote_ident(std::string_view(f.path).substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return out;
}

}  // namespace

ChannelDefinition parse_channel_ddl(std::string_view text) { return Parser(text).channel(); }

SubscribeStatement parse_subscribe(std::string_view text) { return Parser(text).subscribe(); }

std::map<std::string, AliasPredicates> classify_predicates(const ChannelDefinition& def) {
  std::map<std::string, AliasPredicates> out;
  for (const auto& b : def.datasets) out[b.alias];
  auto require = [&](const std::string& alias) -> AliasPredicates& {
    auto it = out.find(alias);
    if (it == out.end()) throw Error(ErrorKind::UnclassifiablePredicate, "unknown alias " + alias);
    return it->second;
  };
  for (const auto& p : def.predicates) {
    switch (p.cls) {
      case PredicateClass::Fixed: require(p.alias()).fixed.push_back(p); break;
      case PredicateClass::Parameterized: {
        const auto& param = std::get<ParamRef>(std::get<Comparison>(p.expr).rhs).name;
        if (std::find(def.params.begin(), def.params.end(), param) == def.params.end()) {
          throw Error(ErrorKind::UnclassifiablePredicate, "unknown parameter " + param);
        }
        require(p.alias()).parameterized.push_back(p);
        break;
      }
      case PredicateClass::Freshness: require(p.alias()).freshness = true; break;
      case PredicateClass::Join: {
        std::string a, b;
        if (auto* c = std::get_if<Comparison>(&p.expr)) {
          a = std::get<FieldRef>(c->lhs).alias;
          b = std::get<FieldRef>(c->rhs).alias;
        } else {
          const auto& sd = std::get<SpatialDistance>(p.expr);
          a = std::get<FieldRef>(sd.a).alias;
          b = std::get<FieldRef>(sd.b).alias;
        }
        require(a).join.push_back(p);
        require(b).join.push_back(p);
        break;
      }
    }
  }
  return out;
}

std::chrono::microseconds parse_iso_duration(std::string_view text) {
  auto bad = [&] { return Error(ErrorKind::SyntaxError, "invalid ISO-8601 duration '" + std::string(text) + "'"); };
  if (text.empty() || (text[0] != 'P' && text[0] != 'p')) throw bad();
  std::size_t i = 1;
  bool in_time = false, any = false;
  long double total_us = 0;
  std::string seen;
  while (i < text.size()) {
    char c = text[i];
    if (c == 'T' || c == 't') {
      if (in_time) throw bad();
      in_time = true;
      ++i;
      continue;
    }
    auto start = i;
    while (i < text.size() && (std::isdigit(static_cast<unsigned char>(text[i])) || text[i] == '.')) ++i;
    if (i == start || i >= text.size()) throw bad();
    long double amount = 0;
    std::string num(text.substr(start, i - start));
    try {
      amount = std::stold(num);
    } catch (...) {
      throw bad();
    }
    char unit = static_cast<char>(std::toupper(static_cast<unsigned char>(text[i++])));
    long double scale = 0;
    if (!in_time && unit == 'D') scale = 86400e6L;
    else if (in_time && unit == 'H') scale = 3600e6L;
    else if (in_time && unit == 'M') scale = 60e6L;
    else if (in_time && unit == 'S') scale = 1e6L;
    else throw bad();
    if (seen.find(unit) != std::string::npos) throw bad();
    if (num.find('.') != std::string::npos && unit != 'S') throw bad();
    seen += unit;
    total_us += amount * scale;
    any = true;
  }
  if (!any) throw bad();
  return std::chrono::microseconds(static_cast<std::int64_t>(std::llround(static_cast<double>(total_us))));
}

std::string format_iso_duration(std::chrono::microseconds d) {
  auto us = d.count();
  if (us == 0) return "PT0S";
  std::string out = "P";
  auto days = us / 86400'000'000LL;
  us %= 86400'000'000LL;
  if (days) out += std::to_string(days) + "D";
  if (us == 0) return out;
  out += "T";
  auto h = us / 3600'000'000LL;
  us %= 3600'000'000LL;
  auto m = us / 60'000'000LL;
  us %= 60'000'000LL;
  if (h) out += std::to_string(h) + "H";
  if (m) out += std::to_string(m) + "M";
  if (us) {
    out += std::to_string(us / 1'000'000);
    if (auto frac = us % 1'000'000) {
      std::string f = std::to_string(frac);
      f.insert(0, 6 - f.size(), '0');
      while (f.back() == '0') f.pop_back();
      out += "." + f;
    }
    out += "S";
  }
  return out;
}

std::string to_string(const Operand& op) {
  if (auto* f = std::get_if<FieldRef>(&op)) return path_text(*f);
  if (auto* p = std::get_if<ParamRef>(&op)) return quote_ident(p->name);
  return to_literal(std::get<Value>(op));
}

std::string to_string(const PredicateAtom& atom) {
  if (auto* n = std::get_if<IsNew>(&atom.expr)) return "is_new(" + quote_ident(n->alias) + ")";
  if (auto* c = std::get_if<Comparison>(&atom.expr)) {
    return to_string(c->lhs) + std::string(to_string(c->op)) + to_string(c->rhs);
  }
  const auto& sd = std::get<SpatialDistance>(atom.expr);
  return "spatial_distance(" + to_string(sd.a) + "," + to_string(sd.b) + ")" + std::string(to_string(sd.op)) +
         to_literal(sd.threshold);
}

std::string to_ddl(const ChannelDefinition& def) {
  std::string out = "CREATE CONTINUOUS PUSH CHANNEL " + quote_ident(def.name) + "(";
  for (std::size_t i = 0; i < def.params.size(); ++i) out += (i ? ", " : "") + quote_ident(def.params[i]);
  out += ")\nPERIOD duration(\"" + format_iso_duration(def.period) + "\") {\n SELECT ";
  for (std::size_t i = 0; i < def.projection.size(); ++i) out += (i ? ", " : "") + path_text(def.projection[i]);
  out += "\n FROM ";
  for (std::size_t i = 0; i < def.datasets.size(); ++i) {
    out += (i ? ", " : "") + quote_ident(def.datasets[i].dataset) + " " + quote_ident(def.datasets[i].alias);
  }
  for (std::size_t i = 0; i < def.predicates.size(); ++i) {
    out += (i ? "\n   AND " : "\n WHERE ") + to_string(def.predicates[i]);
  }
  return out + "};";
}

std::string to_ddl(const SubscribeStatement& stmt) {
  std::string out = "SUBSCRIBE TO " + quote_ident(stmt.channelName) + "(";
  for (std::size_t i = 0; i < stmt.argValues.size(); ++i) out += (i ? ", " : "") + to_literal(stmt.argValues[i]);
  return out + ") ON " + quote_ident(stmt.brokerName) + ";";
}

std::vector<std::string> split_statements(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  bool in_string = false, in_quote = false;
  int depth = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (!in_string && !in_quote && text.substr(i, 2) == "//") {
      auto nl = text.find('\n', i);
      i = nl == std::string_view::npos ? text.size() : nl;
      cur += '\n';
      continue;
    }
    cur += c;
    if (in_string) {
      if (c == '\\' && i + 1 < text.size()) cur += text[++i];
      else if (c == '"') in_string = false;
    } else if (in_quote) {
      if (c == '`') in_quote = false;
    } else if (c == '"') {
      in_string = true;
    } else if (c == '`') {
      in_quote = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      --depth;
    } else if (c == ';' && depth == 0) {
      out.push_back(cur);
      cur.clear();
    }
  }
  out.push_back(cur);
  std::erase_if(out, [](const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)) || c == ';'; });
  });
  return out;
}

}  // namespace bad
