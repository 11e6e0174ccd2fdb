// Regenerates the demo fixture: sources, compiler ABIs and storage layouts
// for three implementation versions, the chain description and labels.
// Usage: NODE_PATH=<dir containing solc and js-sha3> node gen.js
const fs = require('fs');
const path = require('path');
const solc = require('solc');
const { keccak256 } = require('js-sha3');

const here = __dirname;

function address(tag) {
  return '0x' + keccak256('upscan-demo/' + tag).slice(24);
}

function txHash(n) {
  return '0x' + keccak256('upscan-demo/tx/' + n);
}

function selector(signature) {
  return keccak256(signature).slice(0, 8);
}

const IERC20 = `interface IERC20 {
    function transfer(address to, uint256 value) external returns (bool);
    function transferFrom(address from, address to, uint256 value) external returns (bool);
}
`;

const SAFE_ERC20 = `library SafeERC20 {
    function safeTransfer(IERC20 token, address to, uint256 value) internal {
        require(token.transfer(to, value), "transfer failed");
    }
}
`;

function pool(v) {
  const lines = [];
  lines.push('// SPDX-License-Identifier: MIT');
  lines.push('pragma solidity ^0.8.0;');
  lines.push('');
  lines.push(IERC20);
  if (v >= 3) lines.push(SAFE_ERC20);
  lines.push('contract Pool {');
  if (v >= 3) lines.push('    using SafeERC20 for IERC20;\n');
  lines.push('    struct Point {\n        uint256 head;\n        uint256 next;\n    }\n');
  if (v >= 3) lines.push('    enum Mode {\n        Open,\n        Paused\n    }\n');
  lines.push('    bool private initialized;');
  if (v >= 3) lines.push('    Mode public mode;');
  lines.push('    address public owner;');
  lines.push('    IERC20 public token;');
  lines.push(v >= 2 ? '    uint256 public _deprecated_totalDeposits;' : '    uint256 public totalDeposits;');
  lines.push('    mapping(address => uint256) public balances;');
  lines.push('    mapping(uint256 => Point) public checkPoints;');
  lines.push('    mapping(uint256 => uint256) internal supplyAt;');
  if (v >= 2) lines.push('    uint256 public fee;');
  lines.push(`    uint256[${v >= 2 ? 44 : 45}] private __gap;`);
  lines.push('');
  lines.push('    event Deposited(address indexed account, uint256 amount);');
  lines.push('');
  lines.push(`    function initialize(address token_) external {
        require(!initialized, "initialized");
        initialized = true;
        owner = msg.sender;
        token = IERC20(token_);
    }

    function deposit(uint256 amount) external {
        token.transferFrom(msg.sender, address(this), amount);
        balances[msg.sender] += amount;
        emit Deposited(msg.sender, amount);
    }

    function withdraw(uint256 amount) external {
        require(balances[msg.sender] >= amount, "balance");
        balances[msg.sender] -= amount;
        ${v >= 3 ? 'token.safeTransfer(msg.sender, amount);' : 'token.transfer(msg.sender, amount);'}
    }
`);
  if (v === 1) {
    lines.push(`    function totalSupplyAt(uint256 epoch) external view returns (uint256) {
        return supplyAt[epoch];
    }
`);
  }
  if (v >= 3) {
    lines.push(`    function mintTo(address to, uint256 amount, bytes calldata data) external {
        require(msg.sender == owner, "owner");
        require(data.length <= 32, "data");
        balances[to] += amount;
    }
`);
  } else {
    lines.push(`    function mintTo(address to, uint256 amount) external {
        require(msg.sender == owner, "owner");
        balances[to] += amount;
    }
`);
  }
  if (v >= 2) {
    lines.push(`    function setFee(uint256 fee_) external {
        require(msg.sender == owner, "owner");
        fee = fee_;
    }
`);
  }
  lines.push(`    function checkpoint(uint256 bucket, Point memory info) external {
        require(msg.sender == owner, "owner");
        checkPoints[bucket].head ${v >= 2 ? '=' : '=='} info.next;
    }`);
  lines.push('}');
  return lines.join('\n') + '\n';
}

function compile(src) {
  const input = {
    language: 'Solidity',
    sources: { 'Pool.sol': { content: src } },
    settings: { outputSelection: { '*': { Pool: ['abi', 'storageLayout'] } } },
  };
  const out = JSON.parse(solc.compile(JSON.stringify(input)));
  const errors = (out.errors || []).filter((e) => e.severity === 'error');
  if (errors.length) throw new Error(errors.map((e) => e.formattedMessage).join('\n'));
  return out.contracts['Pool.sol'].Pool;
}

function write(rel, content) {
  const p = path.join(here, rel);
  fs.mkdirSync(path.dirname(p), { recursive: true });
  fs.writeFileSync(p, content);
}

const proxy = address('proxy');
const versions = [1, 2, 3].map((v) => ({ v, addr: address('pool-v' + v) }));
const activation = { 1: 100000, 2: 600000, 3: 1000000 };
const latest = 1200000;

for (const { v, addr } of versions) {
  const src = pool(v);
  const out = compile(src);
  write(`sources/${addr}/Pool.sol`, src);
  write(`abis/${addr}.json`, JSON.stringify(out.abi, null, 1) + '\n');
  write(`layouts/${addr}.json`, JSON.stringify(out.storageLayout, null, 1) + '\n');
}

const word = (hex) => hex.replace(/^0x/, '').padStart(64, '0');
const user = address('user');
const calls = {
  deposit: '0x' + selector('deposit(uint256)') + word('64'),
  withdraw: '0x' + selector('withdraw(uint256)') + word('32'),
  totalSupplyAt: '0x' + selector('totalSupplyAt(uint256)') + word('7'),
  mintToOld: '0x' + selector('mintTo(address,uint256)') + word(user) + word('3e8'),
  mintToNew:
    '0x' + selector('mintTo(address,uint256,bytes)') + word(user) + word('3e8') + word('60') + word('0'),
  setFee: '0x' + selector('setFee(uint256)') + word('5'),
  unknown: '0xdeadbeef',
  transfer: '0x',
};

const plan = [];
for (let i = 0; i < 60; i++) {
  const block = 100000 + i * 18000 + 1;
  let kind;
  if (block < activation[2]) kind = ['deposit', 'withdraw', 'totalSupplyAt', 'mintToOld'][i % 4];
  else if (block < activation[3]) kind = ['deposit', 'totalSupplyAt', 'setFee', 'mintToOld', 'withdraw'][i % 5];
  else kind = ['deposit', 'mintToOld', 'mintToNew', 'withdraw', 'unknown', 'transfer'][i % 6];
  const broken =
    (kind === 'totalSupplyAt' && block >= activation[2]) || (kind === 'mintToOld' && block >= activation[3]);
  plan.push({
    hash: txHash(i),
    to: proxy,
    block,
    calldata: calls[kind],
    status: broken || kind === 'unknown' ? 'failed' : 'succeeded',
  });
}

const chain = {
  latest,
  schedules: { [proxy]: versions.map(({ v, addr }) => [activation[v], addr]) },
  transactions: plan,
  initGuards: {
    [proxy]: 'guarded',
    [versions[0].addr]: 'guarded',
    [versions[1].addr]: 'guarded',
    [versions[2].addr]: 'unguarded',
  },
};
write('chain.json', JSON.stringify(chain, null, 1) + '\n');

const labels = [
  {
    proxy,
    oldVersion: versions[0].addr,
    newVersion: versions[1].addr,
    labels: [
      { goal: 'Corrective', category: 'Bug Fix', action: 'Wrong Logic Correction' },
      { goal: 'Preventive', category: 'Code Optimization', action: 'Feature Removal' },
      { goal: 'Perfective', category: 'Usability Improvement', action: 'Functionality Addition' },
    ],
  },
  {
    proxy,
    oldVersion: versions[1].addr,
    newVersion: versions[2].addr,
    labels: [
      { goal: 'Perfective', category: 'Security Improvement', action: 'Safe Operations Use' },
      { goal: 'Perfective', category: 'Usability Improvement', action: 'Functionality Update' },
    ],
  },
];
write('labels.json', JSON.stringify(labels, null, 1) + '\n');
console.log(`compiler ${solc.version()}; proxy ${proxy}`);
