#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace masq::xml {

enum class NodeKind { Element, Text, Cdata, Comment, ProcInstr };

/// Structure-preserving DOM node. Element order, attribute order, and the
/// text/CDATA/comment/PI distinction all survive a parse/serialize round
/// trip; inter-element whitespace is kept as ordinary text nodes.
struct Node {
    NodeKind kind = NodeKind::Element;
    std::string name;                                            // element name or PI target
    std::vector<std::pair<std::string, std::string>> attributes; // document order
    std::string text;                                            // content for non-element kinds
    std::vector<Node> children;                                  // elements only
};

struct Document {
    bool has_declaration = false;
    std::string version = "1.0";
    std::string encoding;        // empty when the declaration carried none
    std::vector<Node> prolog;    // comments / PIs before the root element
    Node root;
    std::vector<Node> epilog;    // comments / PIs after the root element
};

/// Parses a complete XML document. Namespace prefixes are kept verbatim
/// (xmlns attributes are ordinary attributes). Custom entity declarations
/// are rejected. Throws masq::Error{MalformedXml} with line/column context.
Document parse(std::string_view xml_text);

/// Serializes back to UTF-8 text. Text nodes escape & < >, attribute values
/// additionally escape double quotes; CDATA content is emitted inside its
/// section (a literal "]]>" is split across sections).
std::string serialize(const Document& document);

/// Preorder element-name sequence, one entry per element.
std::vector<std::string> element_name_preorder(const Document& document);

/// Semantic tree equality: same element structure, same attribute
/// name->value maps, same merged character data per element (text and CDATA
/// compare as character data; comments and PIs are ignored).
bool tree_equal(const Document& a, const Document& b);

}  // namespace masq::xml
