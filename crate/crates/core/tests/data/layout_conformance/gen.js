// Regenerates the expected compiler storage layouts for every case in
// cases.json. Usage: NODE_PATH=<dir containing solc> node gen.js
const fs = require('fs');
const path = require('path');
const solc = require('solc');

const here = __dirname;
const cases = JSON.parse(fs.readFileSync(path.join(here, 'cases.json'), 'utf8'));

function translate(ty, hoisted) {
  if (typeof ty === 'string') {
    const contract = ty.match(/^contract (\w+)$/);
    if (contract) {
      hoisted.interfaces.add(contract[1]);
      return contract[1];
    }
    return ty;
  }
  if (ty.enum !== undefined) {
    const members = Array.from({ length: ty.members }, (_, i) => `${ty.enum}${i}`);
    hoisted.decls.push(`enum ${ty.enum} { ${members.join(', ')} }`);
    return ty.enum;
  }
  if (ty.struct !== undefined) {
    const fields = ty.fields.map((f) => `${translate(f.type, hoisted)} ${f.name};`);
    hoisted.decls.push(`struct ${ty.struct} { ${fields.join(' ')} }`);
    return ty.struct;
  }
  if (ty.array !== undefined) {
    return `${translate(ty.array, hoisted)}[${ty.length ?? ''}]`;
  }
  if (ty.mapping !== undefined) {
    return `mapping(${translate(ty.mapping[0], hoisted)} => ${translate(ty.mapping[1], hoisted)})`;
  }
  throw new Error(`unsupported type ${JSON.stringify(ty)}`);
}

function source(decls) {
  const hoisted = { decls: [], interfaces: new Set() };
  const vars = decls.map((d) => {
    const ty = translate(d.type, hoisted);
    return d.constant ? `${ty} constant ${d.name} = 1;` : `${ty} ${d.name};`;
  });
  const interfaces = [...hoisted.interfaces].map((i) => `interface ${i} {}\n`).join('');
  const body = [...hoisted.decls, ...vars].map((l) => `    ${l}\n`).join('');
  return `// SPDX-License-Identifier: UNLICENSED\npragma solidity ^0.8.0;\n${interfaces}contract C {\n${body}}\n`;
}

const outDir = path.join(here, 'expected');
fs.mkdirSync(outDir, { recursive: true });
for (const [name, decls] of Object.entries(cases)) {
  const src = source(decls);
  const input = {
    language: 'Solidity',
    sources: { 'C.sol': { content: src } },
    settings: { outputSelection: { '*': { C: ['storageLayout'] } } },
  };
  const out = JSON.parse(solc.compile(JSON.stringify(input)));
  const errors = (out.errors || []).filter((e) => e.severity === 'error');
  if (errors.length) {
    throw new Error(`${name}: ${errors.map((e) => e.formattedMessage).join('\n')}`);
  }
  const layout = out.contracts['C.sol'].C.storageLayout;
  fs.writeFileSync(path.join(outDir, `${name}.sol`), src);
  fs.writeFileSync(path.join(outDir, `${name}.json`), JSON.stringify(layout, null, 1) + '\n');
}
console.log(`compiler ${solc.version()}: ${Object.keys(cases).length} cases`);
