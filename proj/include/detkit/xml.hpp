#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace detkit {

// Minimal XML document model: element names, character data, children.
// Attributes are parsed for well-formedness and discarded; annotation
// files do not use them.
struct XmlNode {
  std::string name;
  std::string text;  // concatenated character data directly inside
  std::vector<XmlNode> children;

  const XmlNode* child(std::string_view child_name) const;
  // Trimmed text of a required child; throws InvalidInputError when missing.
  std::string child_text(std::string_view child_name) const;
};

// Parses a single-root document. Throws ParseError with the byte offset
// of the first malformation.
XmlNode parse_xml(std::string_view input);

std::string xml_escape(std::string_view text);

}  // namespace detkit
