# Regenerates ptb_paragraph.tokens with NLTK's Treebank tokenizer.
# Sentences are split on terminal punctuation first because the Treebank
# tokenizer only detaches a period at the end of its input.
import re
import sys

from nltk.tokenize import TreebankWordTokenizer

text = open(sys.argv[1], encoding="utf-8").read().strip()
sentences = re.split(r"(?<=[.!?])\s+", text)
tok = TreebankWordTokenizer()
out = []
for s in sentences:
    out.extend(t.lower() for t in tok.tokenize(s))
print("\n".join(out))
