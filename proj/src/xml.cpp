#include "detkit/xml.hpp"

#include <cctype>

#include "detkit/error.hpp"

namespace detkit {

namespace {

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
         c == '.' || c == ':';
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

class Parser {
 public:
  explicit Parser(std::string_view input) : in_(input) {}

  XmlNode parse_document() {
    skip_prolog();
    if (pos_ >= in_.size() || in_[pos_] != '<') {
      fail("expected root element");
    }
    XmlNode root = parse_element();
    skip_misc();
    if (pos_ != in_.size()) fail("trailing content after root element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("xml: " + msg, pos_);
  }

  bool starts_with(std::string_view prefix) const {
    return in_.substr(pos_, prefix.size()) == prefix;
  }

  void skip_whitespace() {
    while (pos_ < in_.size() &&
           std::isspace(static_cast<unsigned char>(in_[pos_]))) {
      ++pos_;
    }
  }

  void skip_comment() {
    const std::size_t start = pos_;
    pos_ += 4;  // "<!--"
    const std::size_t end = in_.find("-->", pos_);
    if (end == std::string_view::npos) {
      pos_ = start;
      fail("unterminated comment");
    }
    pos_ = end + 3;
  }

  void skip_misc() {
    for (;;) {
      skip_whitespace();
      if (starts_with("<!--")) {
        skip_comment();
      } else {
        break;
      }
    }
  }

  void skip_prolog() {
    skip_whitespace();
    if (starts_with("<?")) {
      const std::size_t end = in_.find("?>", pos_);
      if (end == std::string_view::npos) fail("unterminated XML declaration");
      pos_ = end + 2;
    }
    skip_misc();
  }

  std::string parse_name() {
    const std::size_t start = pos_;
    while (pos_ < in_.size() && is_name_char(in_[pos_])) ++pos_;
    if (pos_ == start) fail("expected a name");
    return std::string(in_.substr(start, pos_ - start));
  }

  void parse_attributes() {
    for (;;) {
      skip_whitespace();
      if (pos_ >= in_.size()) fail("unterminated start tag");
      const char c = in_[pos_];
      if (c == '>' || c == '/') return;
      parse_name();
      skip_whitespace();
      if (pos_ >= in_.size() || in_[pos_] != '=') fail("expected '='");
      ++pos_;
      skip_whitespace();
      if (pos_ >= in_.size() || (in_[pos_] != '"' && in_[pos_] != '\'')) {
        fail("expected quoted attribute value");
      }
      const char quote = in_[pos_++];
      const std::size_t end = in_.find(quote, pos_);
      if (end == std::string_view::npos) fail("unterminated attribute value");
      pos_ = end + 1;
    }
  }

  char decode_entity() {
    // pos_ is at '&'
    const std::size_t start = pos_;
    const std::size_t end = in_.find(';', pos_);
    if (end == std::string_view::npos || end - pos_ > 8) {
      fail("unterminated entity reference");
    }
    const std::string_view body = in_.substr(pos_ + 1, end - pos_ - 1);
    pos_ = end + 1;
    if (body == "amp") return '&';
    if (body == "lt") return '<';
    if (body == "gt") return '>';
    if (body == "quot") return '"';
    if (body == "apos") return '\'';
    if (!body.empty() && body[0] == '#') {
      long code = 0;
      for (std::size_t i = 1; i < body.size(); ++i) {
        if (body[i] < '0' || body[i] > '9') {
          pos_ = start;
          fail("unsupported character reference");
        }
        code = code * 10 + (body[i] - '0');
      }
      if (code < 1 || code > 127) {
        pos_ = start;
        fail("character reference out of ASCII range");
      }
      return static_cast<char>(code);
    }
    pos_ = start;
    fail("unknown entity reference");
  }

  XmlNode parse_element() {
    ++pos_;  // consume '<'
    XmlNode node;
    node.name = parse_name();
    parse_attributes();
    if (starts_with("/")) {
      ++pos_;
      if (pos_ >= in_.size() || in_[pos_] != '>') fail("expected '>'");
      ++pos_;
      return node;  // self-closing
    }
    if (pos_ >= in_.size() || in_[pos_] != '>') fail("expected '>'");
    ++pos_;

    // Content: text, child elements, comments, then the matching end tag.
    for (;;) {
      if (pos_ >= in_.size()) fail("unterminated element <" + node.name + ">");
      const char c = in_[pos_];
      if (c == '<') {
        if (starts_with("</")) {
          pos_ += 2;
          const std::size_t name_pos = pos_;
          const std::string closing = parse_name();
          if (closing != node.name) {
            pos_ = name_pos;
            fail("mismatched end tag </" + closing + "> for <" + node.name +
                 ">");
          }
          skip_whitespace();
          if (pos_ >= in_.size() || in_[pos_] != '>') fail("expected '>'");
          ++pos_;
          node.text = std::string(trim(node.text));
          return node;
        }
        if (starts_with("<!--")) {
          skip_comment();
        } else {
          node.children.push_back(parse_element());
        }
      } else if (c == '&') {
        node.text.push_back(decode_entity());
      } else {
        node.text.push_back(c);
        ++pos_;
      }
    }
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

const XmlNode* XmlNode::child(std::string_view child_name) const {
  for (const auto& c : children) {
    if (c.name == child_name) return &c;
  }
  return nullptr;
}

std::string XmlNode::child_text(std::string_view child_name) const {
  const XmlNode* c = child(child_name);
  if (c == nullptr) {
    throw InvalidInputError("xml: <" + name + "> is missing required <" +
                            std::string(child_name) + ">");
  }
  return c->text;
}

XmlNode parse_xml(std::string_view input) {
  return Parser(input).parse_document();
}

std::string xml_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace detkit
